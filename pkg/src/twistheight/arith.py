"""Exact integer arithmetic: factorization, Moebius, squarefree parts, Kronecker.

Everything here works on arbitrary-precision Python ints.  The numpy helpers at
the bottom are vectorized twins for int64 workloads (box enumeration) and are
checked against the scalar versions in the test suite.
"""

from __future__ import annotations

import math
import os
import random
import threading
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import _kernels

TRIAL_LIMIT = 10**6

# Deterministic Miller-Rabin for n < 3.3e24 with these bases.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_MR_DETERMINISTIC_LIMIT = 3317044064679887385961981
_RHO_SEED = 0x5EED


def primes_up_to(n: int) -> list[int]:
    """Sieve of Eratosthenes, returned as a list."""
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(range(p * p, n + 1, p)))
    return [i for i, flag in enumerate(sieve) if flag]


_SMALL_PRIMES: list[int] = []


def _small_primes() -> list[int]:
    if not _SMALL_PRIMES:
        _SMALL_PRIMES.extend(primes_up_to(TRIAL_LIMIT))
    return _SMALL_PRIMES


def is_probable_prime(n: int) -> bool:
    """Miller-Rabin; deterministic below 3.3e24, fixed extra bases above."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    bases = list(_MR_BASES)
    if n >= _MR_DETERMINISTIC_LIMIT:
        rng = random.Random(n ^ _RHO_SEED)
        bases += [rng.randrange(2, n - 1) for _ in range(20)]
    for a in bases:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_brent(n: int, rng: random.Random) -> int:
    """Return a nontrivial factor of the odd composite n."""
    while True:
        y = rng.randrange(1, n)
        c = rng.randrange(1, n)
        m = 128
        g = r = q = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


@dataclass(frozen=True)
class Factorization:
    sign: int
    factors: tuple[tuple[int, int], ...]

    def value(self) -> int:
        n = self.sign
        for p, e in self.factors:
            n *= p**e
        return n

    def format(self) -> str:
        return " ".join(f"{p}^{e}" for p, e in self.factors)


@dataclass(frozen=True)
class SquarefreeDecomposition:
    d0: int
    s: int


class FactorCache:
    """Thread-safe memo of factorizations with an optional text file backing.

    File format: one record per line, ``n<TAB>p1^e1 p2^e2 ...``, sorted by |n|
    (ties: negative first).  Concurrent writers resolve last-write-wins.
    """

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self._lock = threading.Lock()
        self._data: dict[int, Factorization] = {}
        if path and os.path.exists(path):
            self.load(path)

    def get(self, n: int) -> Optional[Factorization]:
        with self._lock:
            return self._data.get(n)

    def put(self, n: int, f: Factorization) -> None:
        with self._lock:
            self._data[n] = f

    def __len__(self) -> int:
        return len(self._data)

    def load(self, path: str) -> None:
        with open(path) as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                key, _, rest = line.partition("\t")
                n = int(key)
                factors = []
                for tok in rest.split():
                    p, _, e = tok.partition("^")
                    factors.append((int(p), int(e)))
                self.put(n, Factorization(1 if n > 0 else -1, tuple(factors)))

    def save(self, path: Optional[str] = None) -> None:
        path = path or self.path
        if path is None:
            raise ValueError("no cache path configured")
        with self._lock:
            items = sorted(self._data.items(), key=lambda kv: (abs(kv[0]), kv[0]))
        tmp = f"{path}.tmp{os.getpid()}"
        with open(tmp, "w") as fh:
            for n, f in items:
                fh.write(f"{n}\t{f.format()}\n")
        os.replace(tmp, path)


_default_cache: Optional[FactorCache] = None


def set_factor_cache(cache: Optional[FactorCache]) -> None:
    global _default_cache
    _default_cache = cache


def _factor_positive(n: int, out: dict[int, int]) -> None:
    # trial division, then Pollard-Brent with a seed derived from n
    for p in _small_primes():
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out[p] = out.get(p, 0) + e
        if p == 997 and n > 1 and is_probable_prime(n):
            break
    if n == 1:
        return
    stack = [n]
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if is_probable_prime(m):
            out[m] = out.get(m, 0) + 1
            continue
        r = math.isqrt(m)
        if r * r == m:
            stack += [r, r]
            continue
        f = _pollard_brent(m, random.Random(m ^ _RHO_SEED))
        stack += [f, m // f]


def factor(n: int) -> Factorization:
    """Prime factorization of a nonzero integer, primes ascending."""
    n = int(n)
    if n == 0:
        raise ValueError("cannot factor 0")
    cache = _default_cache
    if cache is not None:
        hit = cache.get(n)
        if hit is not None:
            return hit
    out: dict[int, int] = {}
    _factor_positive(abs(n), out)
    result = Factorization(1 if n > 0 else -1, tuple(sorted(out.items())))
    if cache is not None:
        cache.put(n, result)
    return result


def mobius(d: int) -> int:
    """Moebius function extended by mu(-d) = mu(d) and mu(0) = 0."""
    if d == 0:
        return 0
    f = factor(d)
    if any(e > 1 for _, e in f.factors):
        return 0
    return -1 if len(f.factors) % 2 else 1


def is_squarefree(n: int) -> bool:
    return mobius(n) != 0


def squarefree_part(n: int) -> SquarefreeDecomposition:
    """Write n = d0 * s**2 with d0 squarefree (carrying the sign) and s >= 1."""
    n = int(n)
    if n == 0:
        raise ValueError("squarefree part of 0 is undefined")
    f = factor(n)
    d0, s = f.sign, 1
    for p, e in f.factors:
        if e % 2:
            d0 *= p
        s *= p ** (e // 2)
    return SquarefreeDecomposition(d0, s)


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a|n) on all of Z x Z."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    v = (n & -n).bit_length() - 1
    n >>= v
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            result = -result
    # n is now odd and positive: Jacobi symbol
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def smallest_prime_factors(n: int) -> np.ndarray:
    """spf[k] = least prime dividing k for 2 <= k <= n (spf[0] = spf[1] = 0)."""
    spf = np.zeros(n + 1, dtype=np.int64)
    for p in range(2, n + 1):
        if spf[p] == 0:
            spf[p] = p
            block = spf[p * p :: p]
            block[block == 0] = p
    return spf


def squarefree_parts_array(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized squarefree_part over an int64 array; zeros map to (0, 0).

    Trial division runs through the primes up to the cube root of max |value|;
    whatever survives has at most two large prime factors and is tested for
    being a perfect square.
    """
    values = np.ascontiguousarray(values, dtype=np.int64)
    if values.size == 0:
        return values.copy(), values.copy()
    top = int(np.abs(values).max())
    if top >= 2**62:
        raise OverflowError("values exceed the int64 fast path")
    limit = int(round(top ** (1 / 3))) + 2
    primes = np.array(primes_up_to(max(limit, 2)), dtype=np.int64)
    return _kernels.squarefree_parts(values, primes)


def mobius_abs_array(values: Iterable[int]) -> np.ndarray:
    """|mu| for every entry, with a scalar fallback past the int64 range."""
    arr = list(values)
    try:
        d0, _ = squarefree_parts_array(np.array(arr, dtype=np.int64))
        return (np.abs(d0) == np.abs(np.array(arr, dtype=np.int64))) & (d0 != 0)
    except (OverflowError, ValueError):
        return np.array([abs(mobius(v)) == 1 for v in arr], dtype=bool)
