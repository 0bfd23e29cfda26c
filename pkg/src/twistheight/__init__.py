"""Canonical heights, minimal-height censuses and quartic moments for quadratic twists."""

__version__ = "0.1.0"
