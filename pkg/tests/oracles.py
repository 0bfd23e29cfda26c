"""Slow, independent reference implementations used only by the tests."""

from fractions import Fraction
import math


def factor_by_trial(n):
    n = abs(n)
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def mobius_by_trial(n):
    if n == 0:
        return 0
    f = factor_by_trial(n)
    if any(e > 1 for e in f.values()):
        return 0
    return (-1) ** len(f)


def squarefree_part_by_trial(n):
    sign = -1 if n < 0 else 1
    d0, s = sign, 1
    for p, e in factor_by_trial(n).items():
        if e % 2:
            d0 *= p
        s *= p ** (e // 2)
    return d0, s


def legendre(a, p):
    r = pow(a % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def kronecker_by_definition(a, n):
    # multiplicative in n, with the conventions for -1, 0 and 2
    if n == 0:
        return 1 if abs(a) == 1 else 0
    out = 1
    if n < 0:
        out = -1 if a < 0 else 1
        n = -n
    for p, e in factor_by_trial(n).items():
        if p == 2:
            if a % 2 == 0:
                k = 0
            else:
                k = 1 if a % 8 in (1, 7) else -1
        else:
            k = legendre(a, p)
        out *= k**e
    return out


def quartic_value(A, B, u, v):
    return u * (v**3 + A * u * u * v + B * u**3)


def r_counts_by_loop(A, B, Z):
    counts = {}
    for u in range(-Z, Z + 1):
        for v in range(-Z, Z + 1):
            q = quartic_value(A, B, u, v)
            counts[q] = counts.get(q, 0) + 1
    return counts


def second_moment_by_quadruple_loop(A, B, Z):
    rng = range(-Z, Z + 1)
    total = 0
    for u1 in rng:
        for v1 in rng:
            q1 = quartic_value(A, B, u1, v1)
            for u2 in rng:
                for v2 in rng:
                    if quartic_value(A, B, u2, v2) == q1:
                        total += 1
    return total


def affine_add(A, P, Q, d):
    """Chord-tangent on d y^2 = x^3 + A x + B in plain Fractions; None is infinity."""
    if P is None:
        return Q
    if Q is None:
        return P
    (x1, y1), (x2, y2) = P, Q
    if x1 == x2 and y1 == -y2:
        return None
    if P == Q:
        lam = (3 * x1 * x1 + A) / (2 * d * y1)
    else:
        lam = (y2 - y1) / (x2 - x1)
    x3 = d * lam * lam - x1 - x2
    y3 = lam * (x1 - x3) - y1
    return (x3, y3)


def affine_multiple(A, n, P, d):
    R = None
    for _ in range(n):
        R = affine_add(A, R, P, d)
    return R


def x_height(P):
    x = Fraction(P[0])
    return math.log(max(abs(x.numerator), x.denominator))


def height_by_affine_doubling(A, P, d, n):
    """h(x(2^n P)) / (2 4^n) with an independent affine group law."""
    Q = P
    for _ in range(n):
        Q = affine_add(A, Q, Q, d)
    return x_height(Q) / (2 * 4**n)
