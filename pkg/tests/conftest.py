import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from twistheight.curve import load_curve

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def congruent():
    return load_curve("congruent")


@pytest.fixture(scope="session")
def curve37a():
    return load_curve("37a")
