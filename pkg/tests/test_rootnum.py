import pytest
from hypothesis import given, strategies as st

from twistheight import arith
from twistheight import rootnum as rn
from twistheight.curve import BaseCurve, load_curve


def squarefree(lo, hi):
    return st.integers(lo, hi).filter(lambda d: d != 0 and arith.is_squarefree(d))


def test_bundled_congruent_examples(congruent):
    rule = rn.rule_for(congruent)
    assert rule.omega(5) == -1
    assert rule.omega(3) == 1
    assert rule.omega(-6) == -1
    assert rule.omega(7) == -1
    assert [rule.omega(d) for d in (1, 2, 3, 5, 6, 7, 10, 13, 14, 15)] == \
        [1, 1, 1, -1, -1, -1, 1, -1, -1, -1]


def test_bundled_rule_agrees_with_derived(congruent):
    ds = [d for d in range(-2000, 2001) if d and arith.is_squarefree(d)]
    assert rn.agreement(rn.rule_for(congruent), rn.derive_rule(congruent), ds) == []


def test_derived_rule_by_formula(curve37a):
    rule = rn.derive_rule(curve37a)
    assert rule.modulus == 4 * 37
    for d in range(-400, 401):
        if d == 0 or not arith.is_squarefree(d):
            continue
        D = d if d % 4 == 1 else 4 * d
        got = rule.omega(d)
        if D % 37 == 0:
            assert got is None
        else:
            assert got == -1 * arith.kronecker(D, -37)


@given(squarefree(-10**6, 10**6))
def test_periodicity(d):
    c = BaseCurve(-16, 16, 37, -1)
    rule = rn.derive_rule(c)
    step = rule.modulus * (1 if d > 0 else -1)
    e = d + step
    if arith.is_squarefree(e):
        assert rule.omega(d) == rule.omega(e)


@given(squarefree(1, 10**5))
def test_b_zero_symmetry(d):
    # E_d and E_-d are isomorphic when B = 0 via x -> -x
    rule = rn.load_rule(load_curve("congruent").root_rule_path)
    assert rule.omega(d) == rule.omega(-d)
    derived = rn.derive_rule(BaseCurve(-1, 0, 32, 1))
    if None not in (derived.omega(d), derived.omega(-d)):
        assert derived.omega(d) == derived.omega(-d)


def test_non_squarefree_rejected(congruent):
    with pytest.raises(ValueError):
        rn.omega(rn.rule_for(congruent), 12)


def test_unknown_outside_domain(curve37a):
    assert rn.derive_rule(curve37a).omega(37) is None
    assert rn.derive_rule(curve37a).omega(-74) is None


def test_rule_file_roundtrip(tmp_path, curve37a):
    rule = rn.derive_rule(curve37a)
    path = tmp_path / "r.rule"
    rn.save_rule(rule, str(path))
    again = rn.load_rule(str(path))
    assert again.modulus == rule.modulus and again.table == rule.table


def test_three_column_rule_applies_to_both_signs(tmp_path):
    path = tmp_path / "r.rule"
    path.write_text("1\t8\t+1\n5\t8\t-1\n# comment\n")
    rule = rn.load_rule(str(path))
    assert rule.omega(1) == 1 and rule.omega(-7) == 1
    assert rule.omega(5) == -1 and rule.omega(3) is None


@pytest.mark.parametrize("text", ["1\t8\n", "1\t8\t+1\n3\t16\t-1\n", "9\t8\t+1\n", "1\t8\t2\n", ""])
def test_bad_rule_files(tmp_path, text):
    path = tmp_path / "bad.rule"
    path.write_text(text)
    with pytest.raises(ValueError):
        rn.load_rule(str(path))
