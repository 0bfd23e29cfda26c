"""Representation counts of the quartic form Q(u, v) = u (v^3 + A u^2 v + B u^3).

All counts are over the closed box |u|, |v| <= Z.  The box is enumerated in
disjoint u-strips whose (value, count) tables merge associatively.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import arith
from .curve import BaseCurve
from .rootnum import RootRule

INT64_SAFE = 2**62


@dataclass(frozen=True)
class QuarticForm:
    A: int
    B: int

    def __post_init__(self):
        if 4 * self.A**3 + 27 * self.B**2 == 0:
            raise ValueError("4A^3 + 27B^2 must be nonzero")

    @classmethod
    def from_curve(cls, curve: BaseCurve) -> "QuarticForm":
        return cls(curve.A, curve.B)

    def value_bound(self, Z: int) -> int:
        return Z**4 * (1 + abs(self.A) + abs(self.B))


@dataclass
class MomentReport:
    """Moments of r_Q(.; Z).  ``values``/``counts`` is the sparse map d -> r_Q(d; Z)."""

    Z: int
    total_pairs: int
    values: np.ndarray
    counts: np.ndarray
    R_Q: int
    S_plus: Optional[int] = None
    S_minus: Optional[int] = None
    S_unknown: Optional[int] = None
    distinct_plus: Optional[int] = None
    distinct_minus: Optional[int] = None
    distinct_unknown: Optional[int] = None

    @property
    def r_histogram(self) -> dict:
        return dict(zip(self.values.tolist(), self.counts.tolist()))

    def S(self, nu: int) -> int:
        return self.S_plus if nu > 0 else self.S_minus

    def distinct(self, nu: int) -> int:
        return self.distinct_plus if nu > 0 else self.distinct_minus

    @property
    def unknown_fraction(self) -> float:
        total = self.S_plus + self.S_minus + self.S_unknown
        return self.S_unknown / total if total else 0.0


def q_eval(form: QuarticForm, u: int, v: int) -> int:
    return u * (v**3 + form.A * u * u * v + form.B * u**3)


def strip_values(form: QuarticForm, Z: int, u_lo: int, u_hi: int) -> np.ndarray:
    """Q over u_lo <= u <= u_hi, |v| <= Z, flattened with u major."""
    if form.value_bound(Z) >= INT64_SAFE:
        return np.array([q_eval(form, u, v) for u in range(u_lo, u_hi + 1)
                         for v in range(-Z, Z + 1)], dtype=object)
    u = np.arange(u_lo, u_hi + 1, dtype=np.int64)[:, None]
    v = np.arange(-Z, Z + 1, dtype=np.int64)[None, :]
    return (u * (v**3 + form.A * u * u * v + form.B * u**3)).ravel()


def _aggregate_sorted(vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if vals.dtype == object:
        c = Counter(vals.tolist())
        keys = sorted(c)
        return np.array(keys, dtype=object), np.array([c[k] for k in keys], dtype=np.int64)
    vals = np.sort(vals, kind="stable")
    if vals.size == 0:
        return vals, np.zeros(0, dtype=np.int64)
    starts = np.flatnonzero(np.r_[True, vals[1:] != vals[:-1]])
    counts = np.diff(np.r_[starts, vals.size])
    return vals[starts], counts.astype(np.int64)


def _aggregate_hashed(vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = Counter(vals.tolist())
    keys = sorted(c)
    dtype = object if vals.dtype == object else np.int64
    return np.array(keys, dtype=dtype), np.array([c[k] for k in keys], dtype=np.int64)


def _merge(parts: list[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    """Combine (value, count) tables; order of parts does not matter."""
    if len(parts) == 1:
        return parts[0]
    vals = np.concatenate([p[0] for p in parts])
    cnts = np.concatenate([p[1] for p in parts])
    if vals.dtype == object:
        c: Counter = Counter()
        for v, n in zip(vals.tolist(), cnts.tolist()):
            c[v] += n
        keys = sorted(c)
        return np.array(keys, dtype=object), np.array([c[k] for k in keys], dtype=np.int64)
    order = np.argsort(vals, kind="stable")
    vals, cnts = vals[order], cnts[order]
    starts = np.flatnonzero(np.r_[True, vals[1:] != vals[:-1]])
    return vals[starts], np.add.reduceat(cnts, starts)


def _strip_job(args):
    form, Z, u_lo, u_hi, method = args
    vals = strip_values(form, Z, u_lo, u_hi)
    return _aggregate_hashed(vals) if method == "hash" else _aggregate_sorted(vals)


def _strips(Z: int, n: int) -> list[tuple[int, int]]:
    edges = np.linspace(-Z, Z + 1, max(1, n) + 1).astype(int)
    return [(int(a), int(b) - 1) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def value_table(form: QuarticForm, Z: int, method: str = "sort", workers: int = 1,
                strips: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Distinct values of Q on the box with their multiplicities r_Q(d; Z)."""
    if Z < 1:
        raise ValueError("Z must be a positive integer")
    if method not in ("sort", "hash"):
        raise ValueError(f"unknown aggregation method {method!r}")
    nstrips = strips or max(1, workers)
    jobs = [(form, Z, a, b, method) for a, b in _strips(Z, nstrips)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_strip_job, jobs))
    else:
        parts = [_strip_job(j) for j in jobs]
    return _merge(parts)


def r_count(form: QuarticForm, d: int, Z: int) -> int:
    vals = strip_values(form, Z, -Z, Z)
    return int(np.count_nonzero(vals == d))


def second_moment(form: QuarticForm, Z: int, method: str = "sort", workers: int = 1) -> int:
    _, counts = value_table(form, Z, method, workers)
    return int(sum(int(c) * int(c) for c in counts))


def _omega_array(rule: RootRule, d: np.ndarray) -> np.ndarray:
    """Root numbers for squarefree int64 d, 0 where the rule is silent."""
    pos = np.zeros(rule.modulus, dtype=np.int64)
    neg = np.zeros(rule.modulus, dtype=np.int64)
    for (s, r), w in rule.table.items():
        (pos if s > 0 else neg)[r] = w
    res = np.mod(d, rule.modulus)
    return np.where(d > 0, pos[res], neg[res])


def moment_report(form: QuarticForm, Z: int, rule: Optional[RootRule] = None,
                  method: str = "sort", workers: int = 1) -> MomentReport:
    """R_Q(Z) and, given a root-number rule, the sign-restricted counts S_nu(Z)."""
    values, counts = value_table(form, Z, method, workers)
    R = int(sum(int(c) * int(c) for c in counts))
    rep = MomentReport(Z, (2 * Z + 1) ** 2, values, counts, R)
    if rule is None:
        return rep
    nz = values != 0
    vals, cnts = values[nz], counts[nz]
    if vals.dtype == object:
        sqf = np.array([arith.is_squarefree(int(v)) for v in vals], dtype=bool)
        w = np.array([rule.table.get((1 if v > 0 else -1, int(v) % rule.modulus), 0)
                      for v in vals[sqf]], dtype=np.int64)
    else:
        d0, _ = arith.squarefree_parts_array(vals)
        sqf = d0 == vals
        w = _omega_array(rule, vals[sqf])
    c = cnts[sqf]
    rep.S_plus = int(c[w == 1].sum())
    rep.S_minus = int(c[w == -1].sum())
    rep.S_unknown = int(c[w == 0].sum())
    rep.distinct_plus = int(np.count_nonzero(w == 1))
    rep.distinct_minus = int(np.count_nonzero(w == -1))
    rep.distinct_unknown = int(np.count_nonzero(w == 0))
    return rep


def sign_restricted_count(form: QuarticForm, Z: int, nu: int, rule: RootRule) -> int:
    return moment_report(form, Z, rule).S(nu)


def distinct_represented(form: QuarticForm, Z: int, nu: int, rule: RootRule) -> int:
    return moment_report(form, Z, rule).distinct(nu)


def cauchy_schwarz_check(form: QuarticForm, Z: int, nu: int, rule: RootRule,
                         report: Optional[MomentReport] = None) -> tuple[int, int, bool]:
    """Exact check of distinct_nu * R_Q >= S_nu^2; returns (lhs, rhs, holds)."""
    rep = report if report is not None else moment_report(form, Z, rule)
    lhs = rep.distinct(nu) * rep.R_Q
    rhs = rep.S(nu) ** 2
    return lhs, rhs, lhs >= rhs
