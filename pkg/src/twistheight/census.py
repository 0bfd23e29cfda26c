"""The set H(Y) of twists with a non-torsion point of canonical height <= log Y.

Candidates come from writing the x-coordinate of a point on E_d as x1/q with
q = d1 * b1^2 (d1 squarefree) and gcd(x1, q) = 1.  Then

    t = x1^3 + A x1 q^2 + B q^3 = d0 * s^2,   d = d0 * d1,   y = s / (d1^2 b1^3).

Every reduced fraction x1/q with t != 0 therefore lands on exactly one twist,
so enumerating |x1|, q <= R covers all points of naive height <= log R.

Heights are bracketed by the telescoping bounds

    h_n / (2 4^n) - lower / 4^n  <=  h_can  <=  h_n / (2 4^n) + upper / 4^n,

with h_n the height of x(2^n P), and refined level by level only for the
candidates whose bracket still matters.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np
from gmpy2 import mpz

from . import _kernels, arith
from .curve import BaseCurve, TwistPoint, add, torsion_order
from .heights import (
    DEFAULT_MAX_DOUBLINGS,
    DEFAULT_TARGET_ERROR,
    HeightComparisonConstant,
    HeightValue,
    PrecisionError,
    comparison_constant,
    doubling_gcd_bound,
    doublings_for,
    log_abs,
    naive_height,
    x_double,
)
from .rootnum import RootRule, omega_unchecked, rule_for

INT64_SAFE = 2**62
_SLACK = 1e-12  # float guard on comparisons against log Y


@dataclass(frozen=True)
class CensusConfig:
    mode: str = "fast"  # "fast": R = kappa Y^2; "rigorous": R = Y^2 e^{2C}
    kappa: float = 4.0
    target_error: float = DEFAULT_TARGET_ERROR
    max_doublings: int = DEFAULT_MAX_DOUBLINGS
    workers: int = 1
    d_max: Optional[int] = None  # report only |d| <= d_max

    def __post_init__(self):
        if self.mode not in ("fast", "rigorous"):
            raise ValueError(f"unknown census mode {self.mode!r}")
        if self.kappa <= 0 or self.target_error <= 0:
            raise ValueError("kappa and target_error must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def to_dict(self) -> dict:
        return {"mode": self.mode, "kappa": self.kappa, "target_error": self.target_error,
                "max_doublings": self.max_doublings, "d_max": self.d_max}


@dataclass(frozen=True)
class CensusEntry:
    d: int
    eta_log: HeightValue
    witness: TwistPoint
    omega: Optional[int]
    predicted_rank: Optional[int]


@dataclass
class CensusReport:
    Y: float
    entries: list
    boundary: list = field(default_factory=list)
    mode: str = "fast"
    bound: int = 0
    omega_minus_frac: float = 0.0
    omega_plus_frac: float = 0.0
    omega_unknown_frac: float = 0.0
    ar_predicted: float = float("nan")

    @property
    def count(self) -> int:
        return len(self.entries)

    @property
    def boundary_count(self) -> int:
        return len(self.boundary)

    def d_set(self) -> set:
        return {e.d for e in self.entries}

    def by_d(self) -> dict:
        return {e.d: e for e in self.entries}

    def summary(self) -> dict:
        return {
            "Y": self.Y,
            "mode": self.mode,
            "bound": self.bound,
            "count": self.count,
            "omega_minus_frac": self.omega_minus_frac,
            "omega_plus_frac": self.omega_plus_frac,
            "omega_unknown_frac": self.omega_unknown_frac,
            "ar_predicted": self.ar_predicted,
            "boundary_count": self.boundary_count,
        }


def predicted_rank(omega: Optional[int]) -> Optional[int]:
    # every d in H(Y) has rank >= 1; the sign then fixes the smallest compatible rank
    return {-1: 1, 1: 2}.get(omega)


def range_bound(curve: BaseCurve, Y: float, mode: str = "fast", kappa: float = 4.0) -> int:
    """R such that the box |x1|, q <= R holds every point the mode promises to find."""
    if mode == "rigorous":
        C = comparison_constant(curve).C
        return max(1, math.ceil(Y * Y * math.exp(2 * C) * (1 + 1e-12)))
    return max(1, math.ceil(kappa * Y * Y))


def _useful_bound(const: HeightComparisonConstant, Y: float) -> int:
    # beyond this, h/2 - lower > log Y and the point cannot count
    return max(1, math.floor(Y * Y * math.exp(2 * const.lower) * (1 + 1e-12)))


# -- candidate enumeration ---------------------------------------------------


@lru_cache(maxsize=8)
def _sieve_tables(A: int, B: int, limit: int):
    primes = arith.primes_up_to(max(limit, 2))
    ptr, roots = [0], []
    for p in primes:
        y = np.arange(p, dtype=np.int64)
        vals = ((y * y % p) * y + A * y + B) % p
        roots.extend(np.flatnonzero(vals == 0).tolist())
        ptr.append(len(roots))
    return (np.array(primes, dtype=np.int64), np.array(ptr, dtype=np.int64),
            np.array(roots, dtype=np.int64))


def _fits_int64(curve: BaseCurve, R: int) -> bool:
    return (1 + abs(curve.A) + abs(curve.B)) * R**3 * R < INT64_SAFE


def _row_reference(curve: BaseCurve, q: int, R: int):
    """Pure-integer twin of the compiled row sieve: (x1, d, s) triples."""
    d1 = arith.squarefree_part(q).d0
    out = []
    for x in range(-R, R + 1):
        if math.gcd(x, q) != 1:
            continue
        t = x**3 + curve.A * x * q * q + curve.B * q**3
        if t == 0:
            continue
        sd = arith.squarefree_part(t)
        out.append((x, sd.d0 * d1, sd.s))
    return out


def candidate_block(curve: BaseCurve, R: int, q_lo: int, q_hi: int) -> dict:
    """Candidates with q_lo <= q <= q_hi as parallel arrays q, x, d, s."""
    if not _fits_int64(curve, R):
        rows = [(q, x, d, s) for q in range(q_lo, q_hi + 1)
                for x, d, s in _row_reference(curve, q, R)]
        cols = list(zip(*rows)) if rows else [(), (), (), ()]
        return {k: np.array(v, dtype=object) for k, v in zip("qxds", cols)}
    limit = math.ceil(((1 + abs(curve.A) + abs(curve.B)) * R**3) ** (1 / 3)) + 2
    primes, ptr, roots = _sieve_tables(curve.A, curve.B, limit)
    x = np.arange(-R, R + 1, dtype=np.int64)
    qs, xs, ds, ss = [], [], [], []
    for q in range(q_lo, q_hi + 1):
        d0, s = _kernels.twist_row(q, curve.A, curve.B, R, primes, ptr, roots)
        keep = (np.gcd(x, q) == 1) & (d0 != 0)
        d1 = arith.squarefree_part(q).d0
        qs.append(np.full(int(keep.sum()), q, dtype=np.int64))
        xs.append(x[keep])
        ds.append(d0[keep] * d1)
        ss.append(s[keep])
    if not qs:
        empty = np.zeros(0, dtype=np.int64)
        return {k: empty for k in "qxds"}
    return {"q": np.concatenate(qs), "x": np.concatenate(xs),
            "d": np.concatenate(ds), "s": np.concatenate(ss)}


def _block_job(args):
    curve, R, lo, hi = args
    return candidate_block(curve, R, lo, hi)


def _row_blocks(R: int, nblocks: int) -> list[tuple[int, int]]:
    edges = np.linspace(1, R + 1, max(1, min(nblocks, R)) + 1).astype(int)
    return [(int(a), int(b) - 1) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _run(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def all_candidates(curve: BaseCurve, R: int, workers: int = 1) -> dict:
    """Candidate arrays for the box |x1| <= R, 1 <= q <= R, in (q, x1) order."""
    jobs = [(curve, R, a, b) for a, b in _row_blocks(R, workers * 4)]
    parts = _run(_block_job, jobs, workers)
    return {k: np.concatenate([p[k] for p in parts]) for k in "qxds"}


def candidate_point(d: int, x: int, q: int, s: int) -> TwistPoint:
    d1 = arith.squarefree_part(q).d0
    b1 = math.isqrt(q // d1)
    return TwistPoint.from_affine(d, Fraction(x, q), Fraction(s, d1 * d1 * b1**3))


def enumerate_candidates(curve: BaseCurve, Y: float, mode: str = "fast",
                         kappa: float = 4.0) -> Iterator[tuple[int, TwistPoint]]:
    """Stream (d, point) over the candidate box in (q, x1) order."""
    R = range_bound(curve, Y, mode, kappa)
    for q in range(1, R + 1):
        block = candidate_block(curve, R, q, q)
        for x, d, s in zip(block["x"].tolist(), block["d"].tolist(), block["s"].tolist()):
            yield d, candidate_point(d, x, q, s)


# -- height brackets -----------------------------------------------------------


class _Bracket:
    """Height bracket of one candidate at doubling level n."""

    __slots__ = ("key", "payload", "a", "b", "n", "hn", "lo", "hi", "value")

    def __init__(self, key, payload, a, b, hn, const, n=0):
        self.key = key  # witness tie-break key
        self.payload = payload
        self.a, self.b, self.n, self.hn = a, b, n, hn
        self.reset(const)

    def reset(self, const):
        scale = 4.0**self.n
        self.value = self.hn / (2 * scale)
        self.lo = self.value - const.lower / scale
        self.hi = self.value + const.upper / scale

    def hv(self, const) -> HeightValue:
        return HeightValue(self.value, const.C / 4.0**self.n)


class _XLadder:
    """Advance brackets by exact x-only doubling."""

    def __init__(self, curve, const):
        self.A, self.B = mpz(curve.A), mpz(curve.B)
        self.gmax = doubling_gcd_bound(curve.A, curve.B)
        self.const = const

    def make(self, key, payload, a, b, hn, n):
        return _Bracket(key, payload, mpz(a), mpz(b), hn, self.const, n)

    def advance(self, c: _Bracket, n: int):
        while c.n < n:
            c.a, c.b = x_double(c.a, c.b, self.A, self.B, self.gmax)
            c.n += 1
        c.hn = log_abs(max(abs(c.a), abs(c.b))) if c.b else 0.0
        c.reset(self.const)


def _levels(n0: int) -> list[int]:
    return sorted({0, min(1, n0), min(3, n0), n0})


def _settle(cands: list, ladder, log_y: float, n0: int, cap: int):
    """Decide membership for one d and pick its witness.

    Brackets are refined through a ladder of doubling levels; a candidate is
    dropped once its lower end exceeds the best upper end.  Returns (status,
    witness bracket) with status "in", "out" or "boundary".
    """
    status = None
    for level in _levels(n0) + list(range(n0 + 1, cap + 1)):
        if level > n0 and status is not None:
            break
        for c in cands:
            if c.n < level:
                ladder.advance(c, level)
        best_hi = min(c.hi for c in cands)
        cands = [c for c in cands if c.lo <= best_hi]
        if status is None:
            if best_hi <= log_y + _SLACK:
                status = "in"
            elif min(c.lo for c in cands) > log_y + _SLACK:
                return "out", None
    if status is None:
        status = "boundary"
    const = ladder.const
    best = min(cands, key=lambda c: c.value)
    # equal canonical heights (P versus P + T) never separate numerically
    slack = 2 * const.C / 4.0**best.n
    tied = [c for c in cands if c.value <= best.value + slack]
    return status, min(tied, key=lambda c: c.key)


def _settle_job(args):
    curve, const, groups, log_y, n0, cap, n_start = args
    ladder = _XLadder(curve, const)
    out = []
    for d, rows in groups:
        cands = [ladder.make((abs(x), x, q), (x, q, s), a, b, h, n_start)
                 for x, q, s, a, b, h in rows]
        status, c = _settle(cands, ladder, log_y, n0, cap)
        if status != "out":
            out.append((d, status, c.payload, c.hv(const)))
    return out


def _torsion_mask(curve: BaseCurve, cand: dict, const: HeightComparisonConstant,
                  h: np.ndarray) -> np.ndarray:
    """True for candidates that are torsion points (exact order <= 12 test)."""
    mask = np.zeros(h.shape[0], dtype=bool)
    # h_can = 0 forces h/2 <= lower; only those need the exact test
    for i in np.flatnonzero(h / 2 <= const.lower + 1e-9).tolist():
        d, x, q, s = (int(cand[k][i]) for k in "dxqs")
        if torsion_order(curve, candidate_point(d, x, q, s)) is not None:
            mask[i] = True
    return mask


def _naive_heights(cand: dict) -> np.ndarray:
    if cand["x"].dtype == object:
        return np.array([log_abs(max(abs(int(x)), int(q)))
                         for x, q in zip(cand["x"], cand["q"])], dtype=np.float64)
    return np.log(np.maximum(np.abs(cand["x"]), cand["q"]).astype(np.float64))


def _group_prune(value, lower, upper, starts, group, mask=None) -> np.ndarray:
    """Keep brackets whose lower end is at most the best upper end in their d-group."""
    hi = value + upper
    if mask is not None:
        hi = np.where(mask, hi, np.inf)
    best_hi = np.minimum.reduceat(hi, starts)
    return value - lower <= best_hi[group] + _SLACK


def _first_doubling(curve: BaseCurve, cand: dict, keep: np.ndarray):
    """Vectorized x(2P) for the whole candidate array when it fits in int64.

    Returns (a, b, h) with a/b reduced, or None when int64 would overflow.
    Entries outside ``keep`` are left as harmless placeholders.
    """
    x, q = cand["x"], cand["q"]
    A, B = curve.A, curve.B
    if x.dtype == object or x.size == 0:
        return None
    R = int(max(np.abs(x).max(), q.max()))
    coef = 1 + 2 * abs(A) + 8 * abs(B) + A * A + 4 * (1 + abs(A) + abs(B))
    if coef * R**4 >= INT64_SAFE:
        return None
    x2, q2 = x * x, q * q
    num = x2 * x2 - 2 * A * x2 * q2 - 8 * B * x * q2 * q + A * A * q2 * q2
    den = 4 * q * (x2 * x + A * x * q2 + B * q2 * q)
    # den = 0 only at 2-torsion, which the torsion mask removed
    den = np.where(keep, den, 1)
    g = np.gcd(np.gcd(num, den), doubling_gcd_bound(A, B))
    num, den = num // g, den // g
    sign = np.where(den < 0, -1, 1)
    num, den = num * sign, den * sign
    h1 = np.log(np.maximum(np.abs(num), den).astype(np.float64))
    return num, den, h1


def build_census(curve: BaseCurve, Y: float, config: CensusConfig = CensusConfig(),
                 rule: Optional[RootRule] = None) -> CensusReport:
    """Compute H(Y) with minimal-height witnesses and sign statistics."""
    if not Y > 0:
        raise ValueError("Y must be positive")
    rule = rule or rule_for(curve)
    const = comparison_constant(curve)
    n0 = doublings_for(const.C, config.target_error)
    if n0 > config.max_doublings:
        raise PrecisionError(f"target error {config.target_error:g} needs {n0} doublings "
                             f"(cap {config.max_doublings})")
    R = range_bound(curve, Y, config.mode, config.kappa)
    report = CensusReport(Y, [], mode=config.mode, bound=R)
    log_y = math.log(Y)
    if log_y <= 0:
        return _finish(report)

    cand = all_candidates(curve, min(R, _useful_bound(const, Y)), config.workers)
    if config.d_max is not None:
        keep = np.abs(cand["d"]) <= config.d_max
        cand = {k: v[keep] for k, v in cand.items()}
    h = _naive_heights(cand)
    keep = (h / 2 - const.lower <= log_y + _SLACK) & ~_torsion_mask(curve, cand, const, h)
    cand = {k: v[keep] for k, v in cand.items()}
    h = h[keep]
    if h.size == 0:
        return _finish(report)

    # group by d and drop candidates that cannot beat the group's best upper bound
    order = np.lexsort((cand["x"], cand["q"], cand["d"]))
    cand = {k: v[order] for k, v in cand.items()}
    h = h[order]
    cand["a"], cand["b"], n_start = cand["x"], cand["q"], 0
    d = cand["d"]
    starts = np.flatnonzero(np.r_[True, d[1:] != d[:-1]])
    group = np.repeat(np.arange(starts.size), np.diff(np.r_[starts, d.size]))
    keep = _group_prune(h / 2, const.lower, const.upper, starts, group)
    first = _first_doubling(curve, cand, keep) if n0 >= 1 else None
    if first is not None:
        cand["a"], cand["b"], h1 = first
        keep &= _group_prune(h1 / 8, const.lower / 4, const.upper / 4, starts, group, keep)
        h, n_start = h1, 1
    cols = [cand[k][keep].tolist() for k in "xqsab"] + [h[keep].tolist()]
    gid = group[keep].tolist()
    groups: list = []
    for i, g in enumerate(gid):
        if not groups or groups[-1][0] != g:
            groups.append((g, int(d[starts[g]]), []))
        groups[-1][2].append(tuple(col[i] for col in cols))
    groups = [(dv, rows) for _, dv, rows in groups]

    size = max(1, math.ceil(len(groups) / (config.workers * 4)))
    jobs = [(curve, const, groups[i:i + size], log_y, n0, config.max_doublings, n_start)
            for i in range(0, len(groups), size)]
    for part in _run(_settle_job, jobs, config.workers):
        for dv, status, (x, q, s), hv in part:
            w = omega_unchecked(rule, dv)
            entry = CensusEntry(dv, hv, candidate_point(dv, x, q, s), w, predicted_rank(w))
            (report.entries if status == "in" else report.boundary).append(entry)
    return _finish(report)


def _finish(report: CensusReport) -> CensusReport:
    report.entries.sort(key=lambda e: (abs(e.d), e.d))
    report.boundary.sort(key=lambda e: (abs(e.d), e.d))
    if report.entries:
        (report.omega_minus_frac, report.omega_plus_frac,
         report.omega_unknown_frac, report.ar_predicted) = omega_statistics(report)
    return report


# -- independent oracle --------------------------------------------------------


def _x_orbit_is_finite(a: int, b: int, A: int, B: int, h_cap: float) -> bool:
    """Torsion test through preperiodicity of the x-coordinate under doubling.

    Every multiple of a torsion point is torsion, so an iterate with naive
    height above h_cap (twice the lower comparison constant) proves the orbit
    is infinite.
    """
    seen = set()
    while b != 0 and (a, b) not in seen:
        if log_abs(max(abs(a), abs(b))) > h_cap:
            return False
        seen.add((a, b))
        a, b = x_double(a, b, A, B)
    return True


class _GroupLawLadder:
    """Advance brackets by doubling points with the full group law."""

    def __init__(self, curve, const):
        self.curve, self.const = curve, const

    def make(self, key, P):
        return _Bracket(key, P, P, None, naive_height(P), self.const)

    def advance(self, c: _Bracket, n: int):
        while c.n < n:
            c.a = add(self.curve, c.a, c.a)
            c.n += 1
        c.hn = naive_height(c.a)
        c.reset(self.const)


def search_points(curve: BaseCurve, ds: Sequence[int], naive_bound: int) -> dict:
    """All affine points x = m/k (reduced, |m|, k <= naive_bound) on each E_d.

    A point exists iff k (m^3 + A m k^2 + B k^3) d is a square; the result maps
    d to its points with y >= 0, in (k, m) order.
    """
    T = naive_bound
    A, B = curve.A, curve.B
    if (1 + abs(A) + abs(B)) * T**4 * max([1] + [abs(v) for v in ds]) >= INT64_SAFE:
        raise OverflowError("search parameters exceed the int64 range")
    dv_arr = np.array(list(ds), dtype=np.int64)
    points: dict[int, list[TwistPoint]] = {}
    m = np.arange(-T, T + 1, dtype=np.int64)
    for k in range(1, T + 1):
        mm = m[np.gcd(m, k) == 1]
        c = k * (mm**3 + A * mm * k * k + B * k**3)
        hit_i, hit_j = _kernels.square_hits(c, dv_arr)
        for i, j in zip(hit_i, hit_j):
            dv = int(dv_arr[j])
            r = math.isqrt(int(c[i]) * dv)
            P = TwistPoint.from_affine(dv, Fraction(int(mm[i]), k), Fraction(r, abs(dv) * k * k))
            points.setdefault(dv, []).append(P)
    return points


def is_torsion_by_orbit(curve: BaseCurve, P: TwistPoint) -> bool:
    """Torsion test independent of the group law (finite x-orbit under doubling)."""
    if P.is_infinity:
        return True
    const = comparison_constant(curve)
    g = math.gcd(P.x, P.z)
    return _x_orbit_is_finite(P.x // g, P.z // g, curve.A, curve.B, 2 * const.lower + 1e-9)


def brute_force_census(curve: BaseCurve, Y: float, D_max: int,
                       naive_bound: Optional[int] = None,
                       target_error: float = DEFAULT_TARGET_ERROR,
                       max_doublings: int = DEFAULT_MAX_DOUBLINGS,
                       rule: Optional[RootRule] = None) -> CensusReport:
    """Reference census by direct search on each twist with |d| <= D_max.

    For every reduced x = m/k with |m|, k <= naive_bound and every d, a point
    exists iff k (m^3 + A m k^2 + B k^3) d is a positive square.  Torsion is
    detected by a finite x-orbit and heights by group-law doubling.
    """
    rule = rule or rule_for(curve)
    const = comparison_constant(curve)
    if naive_bound is None:
        naive_bound = math.ceil(Y * Y * math.exp(2 * const.C)) + 1
    T = naive_bound
    report = CensusReport(Y, [], mode="oracle", bound=T)
    if not Y > 1:
        return _finish(report)
    log_y = math.log(Y)
    ds = [v for v in range(-D_max, D_max + 1) if v and arith.is_squarefree(v)]
    points = search_points(curve, ds, T)

    n0 = doublings_for(const.C, target_error)
    ladder = _GroupLawLadder(curve, const)
    for dv in sorted(points, key=lambda v: (abs(v), v)):
        cands = []
        for P in points[dv]:
            if is_torsion_by_orbit(curve, P):
                continue
            X = P.X
            c = ladder.make((abs(X.numerator), X.numerator, X.denominator), P)
            if c.lo <= log_y + _SLACK:
                cands.append(c)
        if not cands:
            continue
        status, c = _settle(cands, ladder, log_y, n0, max_doublings)
        if status == "out":
            continue
        w = omega_unchecked(rule, dv)
        entry = CensusEntry(dv, c.hv(const), c.payload, w, predicted_rank(w))
        (report.entries if status == "in" else report.boundary).append(entry)
    return _finish(report)


# -- statistics --------------------------------------------------------------


def omega_statistics(report: CensusReport) -> tuple[float, float, float, float]:
    """(Omega_-, Omega_+, Omega_unknown, predicted average rank).

    Fractions are over all entries; the predicted average rank renormalizes
    over entries whose sign is known.
    """
    n = report.count
    if n == 0:
        raise ValueError("omega statistics of an empty census")
    minus = sum(1 for e in report.entries if e.omega == -1)
    plus = sum(1 for e in report.entries if e.omega == 1)
    known = minus + plus
    ar = (minus + 2 * plus) / known if known else float("nan")
    return minus / n, plus / n, (n - known) / n, ar


def renormalized_omegas(report: CensusReport) -> tuple[float, float]:
    """(Omega_-, Omega_+) over entries with known sign."""
    known = report.omega_minus_frac + report.omega_plus_frac
    if known == 0:
        raise ValueError("no entry has a known root number")
    return report.omega_minus_frac / known, report.omega_plus_frac / known


def growth_exponent(reports: Sequence[CensusReport]) -> float:
    """Least-squares slope of log #H(Y) against log Y over nonempty reports."""
    pts = [(math.log(r.Y), math.log(r.count)) for r in reports if r.count > 0]
    if len(pts) < 2:
        raise ValueError("need at least two nonempty reports")
    xs, ys = np.array(pts).T
    return float(np.polyfit(xs, ys, 1)[0])


def cache_key(curve: BaseCurve, Y: float, config: CensusConfig) -> str:
    raw = json.dumps({"A": curve.A, "B": curve.B, "Y": Y, **config.to_dict()}, sort_keys=True)
    return hashlib.sha256(raw.encode()).hexdigest()[:16]
