"""Weil and canonical heights on the twists E_d.

The x-coordinate of 2P is phi(x) = F(x, 1) / G(x, 1) with

    F = x^4 - 2A x^2 z^2 - 8B x z^3 + A^2 z^4,    G = 4 z (x^3 + A x z^2 + B z^3),

and phi does not depend on d.  Writing h for the height of the x-coordinate,
the telescoping identity

    h_can(P) - h(P)/2 = sum_{n>=0} 4^{-n-1} (h(phi(x_n)) - 4 h(x_n)) / 2

bounds the difference by a sixth of the range of h(phi(x)) - 4h(x), which is
controlled by the extrema of max(|F|, |G|) on the unit square boundary and by
the largest possible gcd(F(a, b), G(a, b)) for coprime (a, b).  None of these
quantities involve d, which is what makes the constant twist-uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional

import gmpy2
import numpy as np
from gmpy2 import mpz

from . import arith
from .curve import BaseCurve, CurveError, TwistPoint, torsion_order

DEFAULT_TARGET_ERROR = 1e-4
DEFAULT_MAX_DOUBLINGS = 10
_LOG2 = math.log(2.0)


class PrecisionError(RuntimeError):
    """The requested accuracy needs more doublings than the configured cap."""


@dataclass(frozen=True)
class HeightValue:
    value: float
    error_bound: float

    @property
    def lower(self) -> float:
        return self.value - self.error_bound

    @property
    def upper(self) -> float:
        return self.value + self.error_bound


@dataclass(frozen=True)
class HeightComparisonConstant:
    """|h_can(P) - h(P)/2| <= C on every twist.

    ``lower`` bounds how far h_can can fall below h/2, ``upper`` how far it can
    rise above; C is the larger of the two.
    """

    C: float
    lower: float
    upper: float
    arch_min: float = float("nan")
    arch_max: float = float("nan")
    gcd_max: int = 0


def log_abs(n: int) -> float:
    """Natural log of |n| for arbitrarily large nonzero integers."""
    n = abs(n)
    bits = n.bit_length()
    if bits <= 1000:
        return math.log(int(n))
    shift = bits - 64
    return math.log(int(n >> shift)) + shift * _LOG2


def _x_pair(P) -> Optional[tuple[int, int]]:
    """Reduced (numerator, denominator) of the x-coordinate, None at infinity."""
    if isinstance(P, TwistPoint):
        x, z = P.x, P.z
    else:
        x, _, z = P
    if z == 0:
        return None
    g = math.gcd(x, z)
    x, z = x // g, z // g
    if z < 0:
        x, z = -x, -z
    return x, z


def naive_height(P) -> float:
    """h_x: log max(|a|, |b|) for the x-coordinate a/b in lowest terms; 0 at infinity."""
    pair = _x_pair(P)
    if pair is None:
        return 0.0
    return log_abs(max(abs(pair[0]), abs(pair[1])))


def duplication_forms(A: int, B: int) -> tuple[list[int], list[int]]:
    """Coefficients (x^4, x^3 z, ..., z^4) of the doubling numerator and denominator."""
    F = [1, 0, -2 * A, -8 * B, A * A]
    G = [0, 4, 0, 4 * A, 4 * B]
    return F, G


def _eval_form(c: list[int], a: int, b: int) -> int:
    return sum(ci * a ** (4 - i) * b**i for i, ci in enumerate(c))


def _valuation(n: int, p: int) -> int:
    if n == 0:
        return 1 << 30
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def max_gcd_exponent(F: list[int], G: list[int], p: int, cap: int = 256) -> int:
    """Largest v_p(gcd(F(a, b), G(a, b))) over coprime integer pairs (a, b).

    Walks P^1(Z/p^k) by lifting: once min(v_p F, v_p G) < k at a class
    representative, every lift shares that value.
    """
    best = 0
    stack = [(a, 1, 1) for a in range(p)] + [(1, 0, 1)]
    while stack:
        a, b, k = stack.pop()
        m = min(_valuation(_eval_form(F, a, b), p), _valuation(_eval_form(G, a, b), p))
        if m < k:
            best = max(best, m)
            continue
        if k > cap:
            raise RuntimeError(f"gcd exponent at p={p} did not stabilize")
        pk = p**k
        if b == 1:
            stack += [(a + j * pk, 1, k + 1) for j in range(p)]
        else:
            stack += [(1, b + j * pk, k + 1) for j in range(p)]
    return best


def _archimedean_extrema(F: list[int], G: list[int]) -> tuple[float, float]:
    """min and max of max(|F|, |G|) over max(|a|, |b|) = 1.

    Candidates are the endpoints, critical points of F and G, and the points
    where |F| = |G|; the outward safety factor absorbs root-finding error.
    """
    values = []
    for side in (0, 1):
        if side == 0:  # (a, b) = (1, t)
            f, g = np.poly1d(F[::-1]), np.poly1d(G[::-1])
        else:  # (a, b) = (t, 1)
            f, g = np.poly1d(F), np.poly1d(G)
        ts = [-1.0, 1.0]
        for poly in (f.deriv(), g.deriv(), f - g, f + g):
            if poly.order < 1 or not np.any(poly.coeffs):
                continue
            for r in np.roots(poly.coeffs):
                if abs(r.imag) < 1e-9 and -1 - 1e-9 <= r.real <= 1 + 1e-9:
                    ts.append(min(1.0, max(-1.0, float(r.real))))
        values += [max(abs(f(t)), abs(g(t))) for t in ts]
    return float(min(values) * (1 - 1e-9)), float(max(values) * (1 + 1e-9))


@lru_cache(maxsize=None)
def doubling_gcd_bound(A: int, B: int) -> int:
    """The largest gcd(F(a, b), G(a, b)) over coprime (a, b); every such gcd divides it."""
    F, G = duplication_forms(A, B)
    gmax = 1
    for p, _ in arith.factor(6 * (4 * A**3 + 27 * B**2)).factors:
        gmax *= p ** max_gcd_exponent(F, G, p)
    return gmax


@lru_cache(maxsize=None)
def _computed_constant(A: int, B: int) -> HeightComparisonConstant:
    F, G = duplication_forms(A, B)
    gmax = doubling_gcd_bound(A, B)
    lo, hi = _archimedean_extrema(F, G)
    lower = (math.log(gmax) - math.log(lo)) / 6
    upper = math.log(hi) / 6
    return HeightComparisonConstant(max(lower, upper), lower, upper, lo, hi, gmax)


def comparison_constant(curve: BaseCurve) -> HeightComparisonConstant:
    """Twist-uniform bound on |h_can - h/2|; honours the height_margin_C override."""
    if curve.height_margin_C is not None:
        c = float(curve.height_margin_C)
        return HeightComparisonConstant(c, c, c)
    return _computed_constant(curve.A, curve.B)


def x_double(a: int, b: int, A: int, B: int, gmax: int = 0) -> tuple[int, int]:
    """Reduced x-coordinate of 2P from the reduced x-coordinate a/b of P.

    (1, 0) encodes the point at infinity.  With gmax = doubling_gcd_bound(A, B)
    the common factor is found from residues instead of a full-size gcd.
    """
    if b == 0:
        return 1, 0
    a2, b2 = a * a, b * b
    num = a2 * a2 - 2 * A * a2 * b2 - 8 * B * a * b2 * b + A * A * b2 * b2
    den = 4 * b * (a2 * a + A * a * b2 + B * b2 * b)
    if den == 0:
        return 1, 0
    if gmax:
        g = gmpy2.gcd(gmpy2.gcd(num % gmax, den % gmax), gmax)
    else:
        g = gmpy2.gcd(num, den)
    num, den = num // g, den // g
    if den < 0:
        num, den = -num, -den
    return num, den


def _pair_height(a, b) -> float:
    return log_abs(max(abs(a), abs(b))) if b else 0.0


def doubling_heights(curve: BaseCurve, P: TwistPoint) -> Iterator[tuple[int, float]]:
    """Yield (n, h(x(2^n P))) for n = 0, 1, 2, ... using exact arithmetic."""
    pair = _x_pair(P)
    if pair is None:
        raise CurveError("the point at infinity has no x-coordinate")
    a, b = mpz(pair[0]), mpz(pair[1])
    gmax = doubling_gcd_bound(curve.A, curve.B)
    A, B = mpz(curve.A), mpz(curve.B)
    n = 0
    while True:
        yield n, _pair_height(a, b)
        a, b = x_double(a, b, A, B, gmax)
        n += 1


def doublings_for(C: float, target_error: float) -> int:
    if target_error <= 0:
        raise ValueError("target_error must be positive")
    if C <= target_error:
        return 0
    return math.ceil(math.log(C / target_error, 4) - 1e-12)


def _possibly_torsion(curve: BaseCurve, P: TwistPoint, const: HeightComparisonConstant) -> bool:
    # h_can = 0 forces h/2 <= lower; above that the point has infinite order.
    return naive_height(P) / 2 <= const.lower + 1e-9


def canonical_height(
    curve: BaseCurve,
    P: TwistPoint,
    target_error: float = DEFAULT_TARGET_ERROR,
    max_doublings: int = DEFAULT_MAX_DOUBLINGS,
    constant: Optional[HeightComparisonConstant] = None,
) -> HeightValue:
    """Canonical height of P on E_d with a rigorous error bound.

    Uses n = ceil(log_4(C / target_error)) exact doublings; the value is
    h(x(2^n P)) / (2 * 4^n) and the error bound 4^-n * C.
    """
    if P.is_infinity:
        raise CurveError("canonical height of the point at infinity is not defined here")
    const = constant or comparison_constant(curve)
    if _possibly_torsion(curve, P, const) and torsion_order(curve, P) is not None:
        return HeightValue(0.0, 0.0)
    n = doublings_for(const.C, target_error)
    if n > max_doublings:
        raise PrecisionError(
            f"target error {target_error:g} needs {n} doublings (cap {max_doublings})"
        )
    for k, h in doubling_heights(curve, P):
        if k == n:
            return HeightValue(h / (2 * 4.0**n), const.C / 4.0**n)
    raise AssertionError("unreachable")


def classify(hv: HeightValue, log_y: float) -> Optional[bool]:
    """True if surely <= log_y, False if surely above, None if undecided."""
    if hv.upper <= log_y:
        return True
    if hv.lower > log_y:
        return False
    return None


def eta_log_bound_check(
    curve: BaseCurve,
    P: TwistPoint,
    Y: float,
    target_error: float = DEFAULT_TARGET_ERROR,
    max_doublings: int = DEFAULT_MAX_DOUBLINGS,
    constant: Optional[HeightComparisonConstant] = None,
) -> tuple[Optional[bool], HeightValue]:
    """Decide h_can(P) <= log Y, refining precision up to the doubling cap.

    Returns (decision, height); decision is None for a boundary case that the
    cap could not resolve.
    """
    const = constant or comparison_constant(curve)
    hv = canonical_height(curve, P, target_error, max_doublings, const)
    log_y = math.log(Y)
    verdict = classify(hv, log_y)
    if verdict is not None or hv.error_bound == 0:
        return verdict, hv
    n0 = doublings_for(const.C, target_error)
    for k, h in doubling_heights(curve, P):
        if k <= n0:
            continue
        if k > max_doublings:
            break
        hv = HeightValue(h / (2 * 4.0**k), const.C / 4.0**k)
        verdict = classify(hv, log_y)
        if verdict is not None:
            return verdict, hv
    return None, hv
