"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""

import math
import os
import sys
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from twistheight import census as cs
from twistheight import cli
from twistheight import curve as cv
from twistheight import heights as ht
from twistheight import quartic as qt
from twistheight.curve import load_curve
from twistheight.rootnum import rule_for
from oracles import second_moment_by_quadruple_loop

GROWTH_YS = (5.0, 10.0, 20.0, 40.0)
GROWTH_TARGET = 0.01
PARITY_SEARCH_BOUND = 400
PARITY_LIST = (1, 2, 3, 5, 6, 7, 10, 13, 14, 15)

pytestmark = pytest.mark.slow


def verdict(n, ok, detail, sink=None):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    if sink is not None:
        with sink.disabled():
            print(line)
    else:
        print(line)
    assert ok, line


@pytest.fixture(scope="module")
def curves():
    return load_curve("congruent"), load_curve("37a")


@pytest.fixture(scope="module")
def growth(curves):
    cfg = cs.CensusConfig(target_error=GROWTH_TARGET, workers=os.cpu_count() or 1)
    return [cs.build_census(curves[0], Y, cfg) for Y in GROWTH_YS]


def test_c01_parameterized_points(curves, capsys):
    t0 = time.perf_counter()
    bad = checked = 0
    for c in curves:
        for u in range(-200, 201):
            for v in range(-200, 201):
                if (u, v) == (0, 0) or math.gcd(u, v) != 1:
                    continue
                d, _ = cv.parameterized_point(c, u, v)
                if d == 0:
                    continue
                checked += 1
                # (uv : 1 : u^2) on d y^2 z = x^3 + A x z^2 + B z^3
                bad += not cv.on_curve(c, d, (u * v, 1, u * u))
    dt = time.perf_counter() - t0
    verdict(1, bad == 0 and dt < 10, f"{checked} points, {bad} failures, {dt:.1f}s", capsys)


def test_c02_mass_identity(curves, capsys):
    bad = [(c.name, Z) for c in curves for Z in range(1, 21)
           if int(qt.value_table(qt.QuarticForm.from_curve(c), Z)[1].sum()) != (2 * Z + 1) ** 2]
    verdict(2, not bad, f"Z=1..20 on both curves, mismatches {bad}", capsys)


def test_c03_second_moment_oracle(curves, capsys):
    bad = []
    for c in curves:
        for Z in range(1, 9):
            if qt.second_moment(qt.QuarticForm.from_curve(c), Z) != \
                    second_moment_by_quadruple_loop(c.A, c.B, Z):
                bad.append((c.name, Z))
    form = qt.QuarticForm(-1, 0)
    recorded = (qt.second_moment(form, 1), qt.second_moment(form, 2))
    verdict(3, not bad and recorded == (81, 321),
            f"Z<=8 mismatches {bad}, R_Q(1), R_Q(2) = {recorded}", capsys)


def test_c04_second_moment_growth(curves, capsys):
    t0 = time.perf_counter()
    form = qt.QuarticForm.from_curve(curves[0])
    ratios = [qt.second_moment(form, Z, workers=os.cpu_count() or 1) / Z**2
              for Z in (100, 200, 400, 800)]
    steps = [b / a for a, b in zip(ratios, ratios[1:])]
    dt = time.perf_counter() - t0
    ok = all(0.5 <= s <= 2.0 for s in steps) and dt < 120
    verdict(4, ok, f"R_Q/Z^2 = {[round(r, 2) for r in ratios]}, steps "
                   f"{[round(s, 3) for s in steps]}, {dt:.1f}s", capsys)


def test_c05_sign_restricted_growth(curves, capsys):
    c = curves[0]
    form, rule = qt.QuarticForm.from_curve(c), rule_for(c)
    reps = [qt.moment_report(form, Z, rule) for Z in (100, 200, 400)]
    ok, parts = True, []
    for nu in (1, -1):
        r = [rep.S(nu) / rep.Z**2 for rep in reps]
        steps = [b / a if a else float("inf") for a, b in zip(r, r[1:])]
        ok &= all(x > 0 for x in r) and all(0.5 <= s <= 2.0 for s in steps)
        parts.append(f"S{nu:+d}/Z^2 = {[round(x, 3) for x in r]}")
    unknown = max(rep.unknown_fraction for rep in reps)
    ok &= unknown < 0.5
    verdict(5, ok, "; ".join(parts) + f"; unknown fraction {unknown:.3f}", capsys)


def test_c06_cauchy_schwarz(curves, capsys):
    bad, n = [], 0
    for c in curves:
        form, rule = qt.QuarticForm.from_curve(c), rule_for(c)
        for Z in (10, 50, 100, 200, 400):
            for nu in (1, -1):
                lhs, rhs, holds = qt.cauchy_schwarz_check(form, Z, nu, rule)
                n += 1
                if not holds:
                    bad.append((c.name, Z, nu, lhs, rhs))
    verdict(6, not bad, f"{n} (curve, Z, nu) cases, violations {bad}", capsys)


def test_c07_height_properties(curves, growth, capsys):
    c = curves[0]
    const = ht.comparison_constant(c)
    witnesses = [e.witness for e in growth[2].entries[:100]]
    quad_bad = 0
    for P in witnesses:
        h1 = ht.canonical_height(c, P)
        h2 = ht.canonical_height(c, cv.add(c, P, P))
        quad_bad += abs(h2.value - 4 * h1.value) > h2.error_bound + 4 * h1.error_bound
    tors_bad = 0
    for d in (1, 5, 6, -7, 34):
        for x in (-1, 0, 1):
            hv = ht.canonical_height(c, cv.TwistPoint.from_affine(d, x, 0))
            tors_bad += hv.value != 0.0 or hv.error_bound != 0.0
    gap = max(abs(e.eta_log.value - ht.naive_height(e.witness) / 2) - e.eta_log.error_bound
              for e in growth[-1].entries)
    ok = quad_bad == 0 and tors_bad == 0 and gap <= const.C and len(witnesses) == 100
    verdict(7, ok, f"quadraticity failures {quad_bad}/100, torsion failures {tors_bad}, "
                   f"max |h_can - h/2| = {gap:.4f} <= C = {const.C:.4f} over "
                   f"{growth[-1].count} witnesses", capsys)


def test_c08_oracle_equivalence(curves, capsys):
    t0 = time.perf_counter()
    parts, ok = [], True
    for c in curves:
        fast = cs.build_census(c, 8.0, cs.CensusConfig(mode="rigorous", d_max=500,
                                                       workers=os.cpu_count() or 1))
        ref = cs.brute_force_census(c, 8.0, 500)
        same = fast.d_set() == ref.d_set()
        close = same and all(
            abs(e.eta_log.value - ref.by_d()[e.d].eta_log.value)
            <= e.eta_log.error_bound + ref.by_d()[e.d].eta_log.error_bound
            for e in fast.entries)
        ok &= same and close
        parts.append(f"{c.name}: {fast.count} vs {ref.count} d, heights agree {close}")
    dt = time.perf_counter() - t0
    ok &= dt < 300
    verdict(8, ok, "; ".join(parts) + f"; {dt:.1f}s", capsys)


def test_c09_growth_exponent(growth, capsys):
    slope = cs.growth_exponent(growth)
    counts = [r.count for r in growth]
    verdict(9, slope <= 4.5, f"#H(Y) at Y={list(GROWTH_YS)}: {counts}, "
                             f"fitted exponent {slope:.3f}", capsys)


def test_c10_sign_positivity(growth, capsys):
    big = [r for r in growth if r.count >= 200]
    if not big:
        verdict(10, False, "no census reached 200 entries", capsys)
    rep = big[-1]
    minus, plus = cs.renormalized_omegas(rep)
    ok = minus >= 0.2 and plus >= 0.2 and 1.2 <= rep.ar_predicted <= 1.8
    verdict(10, ok, f"Y={rep.Y:g}, count {rep.count}: Omega- {minus:.3f}, Omega+ {plus:.3f}, "
                    f"ar_predicted {rep.ar_predicted:.3f}", capsys)


def test_c11_parity_cross_check(curves, capsys):
    c = curves[0]
    rule = rule_for(c)
    found = cs.search_points(c, PARITY_LIST, PARITY_SEARCH_BOUND)
    bad = []
    for d in PARITY_LIST:
        has_point = any(not cv.is_torsion(c, P) for P in found.get(d, []))
        if rule.omega(d) != (-1 if has_point else 1):
            bad.append(d)
    verdict(11, not bad, f"search bound {PARITY_SEARCH_BOUND}, mismatches {bad}", capsys)


COMMANDS = [
    ["census", "--Y", "6"],
    ["census", "--Y", "5", "--curve", "37a", "--mode", "rigorous"],
    ["oracle-census", "--Y", "4", "--D-max", "60"],
    ["moments", "--Z", "50,100"],
    ["csbound", "--Z", "50", "--nu", "-1"],
    ["height", "--d", "6", "--point", "2,1"],
    ["rootnum", "--D-max", "100"],
]


def test_c12_reproducibility(tmp_path, capsys):
    n = max(2, os.cpu_count() or 1)
    diffs = []
    for i, argv in enumerate(COMMANDS):
        blobs = []
        for t in (1, n):
            out = tmp_path / f"c{i}-t{t}.csv"
            rc = cli.main(argv + ["--threads", str(t), "--output", str(out)])
            summary = tmp_path / f"c{i}-t{t}.summary.json"
            blobs.append((rc, out.read_bytes(), summary.read_bytes() if summary.exists() else b""))
        if blobs[0] != blobs[1]:
            diffs.append(argv[0])
    capsys.readouterr()
    verdict(12, not diffs, f"{len(COMMANDS)} commands at 1 and {n} threads, differing {diffs}",
            capsys)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
