import numpy as np
import pytest
from hypothesis import given, strategies as st

from twistheight import arith
from oracles import (
    factor_by_trial,
    kronecker_by_definition,
    mobius_by_trial,
    squarefree_part_by_trial,
)


def test_primes_up_to():
    assert arith.primes_up_to(30) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert arith.primes_up_to(1) == []


@pytest.mark.parametrize("n, expected", [
    (12, ((2, 2), (3, 1))),
    (-12, ((2, 2), (3, 1))),
    (1, ()),
    (2**64 + 1, ((274177, 1), (67280421310721, 1))),
])
def test_factor_examples(n, expected):
    f = arith.factor(n)
    assert f.factors == expected
    assert f.value() == n


def test_factor_rejects_zero():
    with pytest.raises(ValueError):
        arith.factor(0)


def test_factor_semiprime_beyond_trial_division():
    p, q = 1000000007, 998244353
    assert arith.factor(p * q).factors == ((q, 1), (p, 1))
    big = (2**61 - 1) * (2**31 - 1)
    assert arith.factor(big).value() == big


@given(st.integers(min_value=-10**9, max_value=10**9).filter(lambda n: n != 0))
def test_factor_matches_trial_division(n):
    assert dict(arith.factor(n).factors) == factor_by_trial(n)


@given(st.integers(min_value=-10**6, max_value=10**6))
def test_mobius_matches_trial(n):
    assert arith.mobius(n) == mobius_by_trial(n)


def test_mobius_examples():
    assert [arith.mobius(n) for n in (1, 2, 4, 6, -30, 0)] == [1, -1, 0, 1, -1, 0]


@given(st.integers(min_value=-10**9, max_value=10**9).filter(lambda n: n != 0))
def test_squarefree_part(n):
    sd = arith.squarefree_part(n)
    assert (sd.d0, sd.s) == squarefree_part_by_trial(n)
    assert sd.d0 * sd.s**2 == n


def test_squarefree_examples():
    assert arith.squarefree_part(24) == arith.SquarefreeDecomposition(6, 2)
    assert arith.squarefree_part(-8) == arith.SquarefreeDecomposition(-2, 2)
    with pytest.raises(ValueError):
        arith.squarefree_part(0)


def test_squarefree_parts_array_matches_scalar():
    rng = np.random.default_rng(7)
    vals = np.concatenate([rng.integers(-10**9, 10**9, 1500), [0, 1, -1, 4, 2**40, 3**24]])
    d0, s = arith.squarefree_parts_array(vals)
    for v, a, b in zip(vals.tolist(), d0.tolist(), s.tolist()):
        if v == 0:
            assert (a, b) == (0, 0)
        else:
            assert (a, b) == squarefree_part_by_trial(v)


def test_squarefree_parts_array_large_prime_square():
    p = 1000003
    d0, s = arith.squarefree_parts_array(np.array([p * p * 6, p * 999983], dtype=np.int64))
    assert d0.tolist() == [6, p * 999983]
    assert s.tolist() == [p, 1]


def test_squarefree_parts_array_overflow():
    with pytest.raises(OverflowError):
        arith.squarefree_parts_array(np.array([2**62], dtype=np.int64))


def test_mobius_abs_array():
    vals = list(range(-50, 51))
    got = arith.mobius_abs_array(vals)
    assert got.tolist() == [abs(mobius_by_trial(v)) == 1 for v in vals]


@given(st.integers(-500, 500), st.integers(-500, 500))
def test_kronecker_matches_definition(a, n):
    assert arith.kronecker(a, n) == kronecker_by_definition(a, n)


def test_kronecker_examples():
    assert arith.kronecker(5, 3) == -1
    assert arith.kronecker(2, 7) == 1
    assert arith.kronecker(-1, 4) == 1
    assert arith.kronecker(3, 8) == -1
    assert arith.kronecker(6, 4) == 0


@given(st.integers(-300, 300), st.integers(1, 200))
def test_kronecker_periodic_in_numerator_for_positive_n(a, n):
    # the period is n, or 4n when n = 2 mod 4
    period = 4 * n if n % 4 == 2 else n
    assert arith.kronecker(a, n) == arith.kronecker(a + period, n)


def test_smallest_prime_factors():
    spf = arith.smallest_prime_factors(30)
    assert spf[2] == 2 and spf[9] == 3 and spf[25] == 5 and spf[29] == 29


def test_factor_cache_roundtrip(tmp_path):
    path = tmp_path / "factors.txt"
    cache = arith.FactorCache()
    arith.set_factor_cache(cache)
    try:
        for n in (360, -91, 2**40 + 1):
            arith.factor(n)
    finally:
        arith.set_factor_cache(None)
    cache.save(str(path))
    again = arith.FactorCache(str(path))
    assert len(again) == 3
    assert again.get(-91) == arith.factor(-91)
    lines = path.read_text().splitlines()
    assert lines[0].split("\t")[0] == "-91"


def test_factor_cache_is_consulted(tmp_path):
    cache = arith.FactorCache()
    fake = arith.Factorization(1, ((7, 1),))
    cache.put(10, fake)
    arith.set_factor_cache(cache)
    try:
        assert arith.factor(10) is fake
    finally:
        arith.set_factor_cache(None)
