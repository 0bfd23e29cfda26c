"""Root numbers of quadratic twists as residue-class tables.

For a squarefree d whose fundamental discriminant D is coprime to N,

    w(E_d) = w(E) * (D | -N).

The value depends only on sign(d) and d mod 4N, so a rule is a table keyed by
(sign, residue).  Anything outside the table is reported as unknown.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import arith
from .curve import BaseCurve


@dataclass(frozen=True)
class RootRule:
    modulus: int
    table: dict = field(hash=False)  # (sign, residue) -> +1 / -1
    source: str = "derived"

    def omega(self, d: int) -> Optional[int]:
        return omega(self, d)

    def covers(self, d: int) -> bool:
        return (1 if d > 0 else -1, d % self.modulus) in self.table


def fundamental_discriminant(d: int) -> int:
    """Discriminant of Q(sqrt(d)) for squarefree d != 1."""
    return d if d % 4 == 1 else 4 * d


def derive_rule(curve: BaseCurve) -> RootRule:
    """Tabulate w(E) * (D | -N) over residues mod 4N, for D coprime to N."""
    N = curve.conductor
    modulus = 4 * N
    table = {}
    for sign in (1, -1):
        for r in range(modulus):
            if r % 4 == 0:
                continue  # never squarefree
            # a representative with this sign and residue; the symbol only
            # sees D mod 4N and the sign of D
            d = r if sign > 0 else r - modulus
            D = fundamental_discriminant(d)
            if math.gcd(D, N) != 1:
                continue
            table[(sign, r)] = curve.root_number * arith.kronecker(D, -N)
    return RootRule(modulus, table, "derived")


def omega(rule: RootRule, d: int) -> Optional[int]:
    """Root number of E_d under the rule, or None when the rule does not cover d."""
    if not arith.is_squarefree(d):
        raise ValueError(f"root number requested for non-squarefree d={d}")
    return rule.table.get((1 if d > 0 else -1, d % rule.modulus))


def omega_unchecked(rule: RootRule, d: int) -> Optional[int]:
    """As omega(), for callers that already know d is squarefree."""
    return rule.table.get((1 if d > 0 else -1, d % rule.modulus))


def load_rule(path: str) -> RootRule:
    """Read ``residue<TAB>modulus<TAB>+-1[<TAB>sign]`` lines.

    Without the optional sign column an entry applies to d of either sign.
    All lines must share one modulus.
    """
    table = {}
    modulus = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) not in (3, 4):
                raise ValueError(f"{path}:{lineno}: expected 3 or 4 fields")
            r, m, w = int(parts[0]), int(parts[1]), int(parts[2])
            if modulus is None:
                modulus = m
            elif m != modulus:
                raise ValueError(f"{path}:{lineno}: mixed moduli {modulus} and {m}")
            if w not in (-1, 1) or not 0 <= r < m:
                raise ValueError(f"{path}:{lineno}: bad entry")
            signs = (1, -1) if len(parts) == 3 else ({"+": 1, "-": -1}[parts[3]],)
            for s in signs:
                table[(s, r)] = w
    if modulus is None:
        raise ValueError(f"{path}: empty rule file")
    return RootRule(modulus, table, path)


def save_rule(rule: RootRule, path: str) -> None:
    with open(path, "w") as fh:
        for (s, r), w in sorted(rule.table.items(), key=lambda kv: (-kv[0][0], kv[0][1])):
            fh.write(f"{r}\t{rule.modulus}\t{w:+d}\t{'+' if s > 0 else '-'}\n")


def rule_for(curve: BaseCurve) -> RootRule:
    """The curve's override table when configured, else the derived rule."""
    if curve.root_rule_path:
        return load_rule(curve.root_rule_path)
    return derive_rule(curve)


def agreement(rule: RootRule, other: RootRule, ds: Iterable[int]) -> list[int]:
    """The d in ds on which both rules are defined but disagree."""
    bad = []
    for d in ds:
        a, b = omega_unchecked(rule, d), omega_unchecked(other, d)
        if a is not None and b is not None and a != b:
            bad.append(d)
    return bad
