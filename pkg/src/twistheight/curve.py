"""Quadratic twists d*y^2 = x^3 + A*x + B and their exact group law."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Optional

from gmpy2 import mpq

from . import arith

# Mazur: a rational torsion point has order at most 12.
MAX_TORSION_ORDER = 12


class CurveError(ValueError):
    """Invalid curve data or a point that does not lie on the twist."""


@dataclass(frozen=True)
class BaseCurve:
    A: int
    B: int
    conductor: int
    root_number: int
    name: str = ""
    root_rule_path: Optional[str] = None
    height_margin_C: Optional[float] = None

    def __post_init__(self):
        if self.discriminant_core == 0:
            raise CurveError(f"singular curve: 4A^3 + 27B^2 = 0 for A={self.A}, B={self.B}")
        if self.conductor < 1:
            raise CurveError("conductor must be positive")
        if self.root_number not in (-1, 1):
            raise CurveError("root number must be +1 or -1")

    @property
    def discriminant_core(self) -> int:
        return 4 * self.A**3 + 27 * self.B**2

    def label(self) -> str:
        return self.name or f"A={self.A},B={self.B}"

    def to_dict(self) -> dict:
        out = {"A": self.A, "B": self.B, "conductor": self.conductor,
               "base_root_number": self.root_number}
        if self.name:
            out["name"] = self.name
        if self.height_margin_C is not None:
            out["height_margin_C"] = self.height_margin_C
        return out


@dataclass(frozen=True)
class ModelNormalization:
    M: int
    A: int
    B: int


@dataclass(frozen=True, order=True)
class TwistPoint:
    """A point of E_d in reduced projective coordinates (x : y : z).

    The point at infinity is (0 : 1 : 0); otherwise z > 0.
    """

    d: int
    x: int
    y: int
    z: int

    @classmethod
    def infinity(cls, d: int) -> "TwistPoint":
        return cls(d, 0, 1, 0)

    @classmethod
    def from_affine(cls, d: int, X, Y) -> "TwistPoint":
        X, Y = Fraction(X), Fraction(Y)
        z = math.lcm(X.denominator, Y.denominator)
        x = X.numerator * (z // X.denominator)
        y = Y.numerator * (z // Y.denominator)
        g = math.gcd(math.gcd(x, y), z)
        return cls(d, x // g, y // g, z // g)

    @classmethod
    def from_projective(cls, d: int, x: int, y: int, z: int) -> "TwistPoint":
        if x == y == z == 0:
            raise CurveError("(0:0:0) is not a projective point")
        g = math.gcd(math.gcd(x, y), z)
        x, y, z = x // g, y // g, z // g
        if z < 0 or (z == 0 and y < 0):
            x, y, z = -x, -y, -z
        if z == 0:
            return cls.infinity(d)
        return cls(d, x, y, z)

    @property
    def is_infinity(self) -> bool:
        return self.z == 0

    @property
    def X(self) -> Optional[Fraction]:
        return None if self.z == 0 else Fraction(self.x, self.z)

    @property
    def Y(self) -> Optional[Fraction]:
        return None if self.z == 0 else Fraction(self.y, self.z)


def load_curve(path_or_name: str) -> BaseCurve:
    """Read a curve from a JSON or key=value file, or a bundled curve name."""
    bundled = bundled_curves()
    if path_or_name in bundled:
        return bundled[path_or_name]
    with open(path_or_name) as fh:
        text = fh.read()
    return _curve_from_text(text, path_or_name)


def _curve_from_text(text: str, origin: str) -> BaseCurve:
    text = text.strip()
    if text.startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                key, _, value = line.partition("=")
                raw[key.strip()] = value.strip()
    try:
        margin = raw.get("height_margin_C")
        return BaseCurve(
            A=int(raw["A"]),
            B=int(raw["B"]),
            conductor=int(raw["conductor"]),
            root_number=int(raw["base_root_number"]),
            name=str(raw.get("name", "")),
            root_rule_path=raw.get("root_rule_path"),
            height_margin_C=None if margin is None else float(margin),
        )
    except KeyError as exc:
        raise CurveError(f"{origin}: missing field {exc.args[0]}") from None


def bundled_curves() -> dict[str, BaseCurve]:
    out = {}
    for entry in resources.files("twistheight.data").iterdir():
        if entry.name.endswith(".curve.json"):
            curve = _curve_from_text(entry.read_text(), entry.name)
            if curve.root_rule_path and not curve.root_rule_path.startswith("/"):
                path = resources.files("twistheight.data").joinpath(curve.root_rule_path)
                curve = BaseCurve(curve.A, curve.B, curve.conductor, curve.root_number,
                                  curve.name, str(path), curve.height_margin_C)
            out[curve.name] = curve
    return out


def normalize_model(curve: BaseCurve) -> ModelNormalization:
    """Rescale by M = 12N so that M divides both coefficients.

    Points map by (x, y) -> (M^2 x, M^3 y).
    """
    M = 12 * curve.conductor
    return ModelNormalization(M, curve.A * M**4, curve.B * M**6)


def on_curve(curve: BaseCurve, d: int, P) -> bool:
    """Check d*y^2*z = x^3 + A*x*z^2 + B*z^3 for a triple or TwistPoint."""
    if isinstance(P, TwistPoint):
        if P.d != d:
            return False
        x, y, z = P.x, P.y, P.z
    else:
        x, y, z = P
    if x == y == z == 0:
        raise CurveError("(0:0:0) is not a projective point")
    return d * y * y * z == x**3 + curve.A * x * z * z + curve.B * z**3


def _check(curve: BaseCurve, P: TwistPoint) -> None:
    if not on_curve(curve, P.d, P):
        raise CurveError(f"{P} is not on E_{P.d}")


def negate(P: TwistPoint) -> TwistPoint:
    if P.is_infinity:
        return P
    return TwistPoint(P.d, P.x, -P.y, P.z)


# Arithmetic happens on Y^2 = X^3 + A d^2 X + B d^3 via (X, Y) = (d x, d^2 y).
def _to_integral(P: TwistPoint):
    d = P.d
    return mpq(d * P.x, P.z), mpq(d * d * P.y, P.z)


def _from_integral(d: int, X, Y) -> TwistPoint:
    x, y = X / d, Y / (d * d)
    return TwistPoint.from_affine(d, Fraction(int(x.numerator), int(x.denominator)),
                                  Fraction(int(y.numerator), int(y.denominator)))


def _add_integral(a2: int, X1, Y1, X2, Y2):
    """Chord-tangent addition on Y^2 = X^3 + a2 X + b; None is the identity."""
    if X1 == X2:
        if Y1 + Y2 == 0:
            return None
        lam = (3 * X1 * X1 + a2) / (2 * Y1)
    else:
        lam = (Y2 - Y1) / (X2 - X1)
    X3 = lam * lam - X1 - X2
    Y3 = lam * (X1 - X3) - Y1
    return X3, Y3


def _sum(a2: int, P, Q):
    if P is None:
        return Q
    if Q is None:
        return P
    return _add_integral(a2, *P, *Q)


def add(curve: BaseCurve, P: TwistPoint, Q: TwistPoint) -> TwistPoint:
    if P.d != Q.d:
        raise CurveError(f"points lie on different twists ({P.d} vs {Q.d})")
    _check(curve, P)
    _check(curve, Q)
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    d = P.d
    out = _add_integral(curve.A * d * d, *_to_integral(P), *_to_integral(Q))
    return TwistPoint.infinity(d) if out is None else _from_integral(d, *out)


def multiply(curve: BaseCurve, n: int, P: TwistPoint) -> TwistPoint:
    """n*P by double-and-add."""
    _check(curve, P)
    if n < 0:
        return multiply(curve, -n, negate(P))
    d = P.d
    if n == 0 or P.is_infinity:
        return TwistPoint.infinity(d)
    a2 = curve.A * d * d
    base = _to_integral(P)
    acc = None
    for bit in bin(n)[2:]:
        acc = _sum(a2, acc, acc)
        if bit == "1":
            acc = _sum(a2, acc, base)
    return TwistPoint.infinity(d) if acc is None else _from_integral(d, *acc)


def torsion_order(curve: BaseCurve, P: TwistPoint) -> Optional[int]:
    """Order of P if it is at most 12, else None (then P has infinite order)."""
    _check(curve, P)
    if P.is_infinity:
        return 1
    d = P.d
    a2 = curve.A * d * d
    base = _to_integral(P)
    acc = base
    for n in range(2, MAX_TORSION_ORDER + 1):
        acc = _add_integral(a2, *acc, *base)
        if acc is None:
            return n
    return None


def is_torsion(curve: BaseCurve, P: TwistPoint) -> bool:
    return torsion_order(curve, P) is not None


def parameterized_point(curve: BaseCurve, u: int, v: int) -> tuple[int, Optional[TwistPoint]]:
    """The twist d = Q(u, v) and the point (uv : 1 : u^2) on it.

    The point is None when u = 0 (it would be the point at infinity) or when
    d = 0 (no twist).
    """
    if u == 0 and v == 0:
        raise CurveError("(u, v) = (0, 0) is excluded")
    d = u * (v**3 + curve.A * u * u * v + curve.B * u**3)
    if u == 0 or d == 0:
        return d, None
    return d, TwistPoint.from_projective(d, u * v, 1, u * u)


def twist_symmetric_point(P: TwistPoint) -> TwistPoint:
    """For B = 0: (X, Y) on E_d maps to (-X, Y) on E_{-d}."""
    if P.is_infinity:
        return TwistPoint.infinity(-P.d)
    return TwistPoint(-P.d, -P.x, P.y, P.z)


def check_twist_index(d: int) -> int:
    if abs(arith.mobius(d)) != 1:
        raise CurveError(f"twist index {d} is not squarefree")
    return d
