"""Compiled int64 inner loops.  Callers guarantee that no value overflows."""

import numpy as np
from numba import njit


@njit(cache=True)
def _isqrt(n):
    r = np.int64(np.sqrt(np.float64(n)))
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


@njit(cache=True)
def squarefree_parts(values, primes):
    n = values.shape[0]
    d0 = np.zeros(n, dtype=np.int64)
    sq = np.zeros(n, dtype=np.int64)
    for i in range(n):
        v = values[i]
        if v == 0:
            continue
        sign = 1
        if v < 0:
            sign = -1
            v = -v
        d = 1
        s = 1
        for k in range(primes.shape[0]):
            p = primes[k]
            if p * p * p > v:
                break
            if v % p == 0:
                e = 0
                while v % p == 0:
                    v //= p
                    e += 1
                if e % 2 == 1:
                    d *= p
                for _ in range(e // 2):
                    s *= p
        if v > 1:
            r = _isqrt(v)
            if r * r == v:
                s *= r
            else:
                d *= v
        d0[i] = sign * d
        sq[i] = s
    return d0, sq


@njit(cache=True)
def twist_row(q, a_coef, b_coef, bound, primes, root_ptr, roots):
    """Squarefree decomposition of t(x) = x^3 + A x q^2 + B q^3 for |x| <= bound.

    Divisibility by p is located through the roots r of y^3 + A y + B mod p:
    for p not dividing q, p | t(x) iff x = q r (mod p).  Entries with
    gcd(x, q) > 1 are not meaningful and must be masked by the caller; t = 0
    yields d0 = 0.
    """
    width = 2 * bound + 1
    rem = np.empty(width, dtype=np.int64)
    sign = np.empty(width, dtype=np.int64)
    d0 = np.ones(width, dtype=np.int64)
    sq = np.ones(width, dtype=np.int64)
    q2 = q * q
    q3 = q2 * q
    for i in range(width):
        x = i - bound
        t = x * x * x + a_coef * x * q2 + b_coef * q3
        if t < 0:
            sign[i] = -1
            rem[i] = -t
        else:
            sign[i] = 1
            rem[i] = t
    for k in range(primes.shape[0]):
        p = primes[k]
        if q % p == 0:
            continue
        for j in range(root_ptr[k], root_ptr[k + 1]):
            c = (q % p) * roots[j] % p
            start = (c + bound) % p
            for i in range(start, width, p):
                v = rem[i]
                if v == 0:
                    continue
                e = 0
                while v % p == 0:
                    v //= p
                    e += 1
                rem[i] = v
                if e % 2 == 1:
                    d0[i] *= p
                for _ in range(e // 2):
                    sq[i] *= p
    for i in range(width):
        v = rem[i]
        if v == 0:
            d0[i] = 0
            sq[i] = 0
            continue
        if v > 1:
            r = _isqrt(v)
            if r * r == v:
                sq[i] *= r
            else:
                d0[i] *= v
        d0[i] *= sign[i]
    return d0, sq


@njit(cache=True)
def square_hits(c_values, d_values):
    """Pairs (i, j) with c_values[i] * d_values[j] a positive perfect square."""
    out_i = []
    out_j = []
    for i in range(c_values.shape[0]):
        c = c_values[i]
        if c == 0:
            continue
        for j in range(d_values.shape[0]):
            v = c * d_values[j]
            if v <= 0:
                continue
            r = _isqrt(v)
            if r * r == v:
                out_i.append(i)
                out_j.append(j)
    return out_i, out_j
