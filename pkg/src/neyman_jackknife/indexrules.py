"""Index-sampling rules: laws of the random update set S given the treatments.

Every rule knows its unit count m and exposes sampling, exact pmf evaluation,
and support enumeration. Rules flagged `w_independent` ignore the treatment
vector entirely; `size_symmetric` rules put equal mass on every subset of the
same cardinality (the hypothesis of the completely-randomized gap formula).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .design import TreatmentVector
from .errors import SupportSizeError

IndexSet = tuple[int, ...]

DEFAULT_RULE_CAP = 1 << 20


@dataclass(frozen=True)
class SingleUniform:
    """One unit chosen uniformly at random."""

    m: int

    w_independent = True
    size_symmetric = True

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be positive")


@dataclass(frozen=True)
class UniformSubset:
    """Uniform draw among all subsets of fixed size L."""

    m: int
    L: int

    w_independent = True
    size_symmetric = True

    def __post_init__(self):
        if not 1 <= self.L <= self.m:
            raise ValueError(f"need 1 <= L <= m, got L={self.L}, m={self.m}")


@dataclass(frozen=True)
class CycleBlock:
    """Contiguous block of length L with a uniform start, wrapping modulo m."""

    m: int
    L: int

    w_independent = True

    def __post_init__(self):
        if not 1 <= self.L <= self.m:
            raise ValueError(f"need 1 <= L <= m, got L={self.L}, m={self.m}")

    @property
    def size_symmetric(self) -> bool:
        # the full-cycle block is the (unique) size-m subset
        return self.L == self.m


@dataclass(frozen=True)
class PartitionBlock:
    """Uniform choice among the fixed consecutive blocks {0..ell-1}, {ell..2ell-1}, ..."""

    m: int
    ell: int

    w_independent = True

    def __post_init__(self):
        if self.ell < 1 or self.m % self.ell != 0:
            raise ValueError(f"ell={self.ell} must divide m={self.m}")

    @property
    def k(self) -> int:
        return self.m // self.ell

    @property
    def size_symmetric(self) -> bool:
        return self.ell == self.m


@dataclass(frozen=True)
class TreatedControlPair:
    """One treated unit and one control unit, each uniform given the treatments."""

    m: int

    w_independent = False
    size_symmetric = False

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("need m >= 2 for a treated/control pair")


IndexRule = SingleUniform | UniformSubset | CycleBlock | PartitionBlock | TreatedControlPair


def _cycle_block(m: int, start: int, L: int) -> IndexSet:
    return tuple(sorted((start + r) % m for r in range(L)))


def _check_length(rule: IndexRule, w: TreatmentVector) -> None:
    if len(w) != rule.m:
        raise ValueError(f"treatment vector length {len(w)} != rule.m={rule.m}")


def sample_index_set(rule: IndexRule, w: TreatmentVector, rng: np.random.Generator) -> IndexSet:
    """Draw one update set from the rule's law given w."""
    _check_length(rule, w)
    if isinstance(rule, SingleUniform):
        return (int(rng.integers(rule.m)),)
    if isinstance(rule, UniformSubset):
        return tuple(sorted(int(j) for j in rng.choice(rule.m, size=rule.L, replace=False)))
    if isinstance(rule, CycleBlock):
        return _cycle_block(rule.m, int(rng.integers(rule.m)), rule.L)
    if isinstance(rule, PartitionBlock):
        b = int(rng.integers(rule.k))
        return tuple(range(b * rule.ell, (b + 1) * rule.ell))
    treated = [j for j, b in enumerate(w) if b == 1]
    control = [j for j, b in enumerate(w) if b == 0]
    if not treated or not control:
        raise ValueError("treated/control pair needs both arms nonempty")
    j = treated[int(rng.integers(len(treated)))]
    k = control[int(rng.integers(len(control)))]
    return tuple(sorted((j, k)))


def index_set_pmf(rule: IndexRule, w: TreatmentVector, A: IndexSet) -> float:
    """Exact conditional mass of the update set A given w."""
    _check_length(rule, w)
    A = tuple(sorted(A))
    if isinstance(rule, SingleUniform):
        return 1.0 / rule.m if len(A) == 1 and 0 <= A[0] < rule.m else 0.0
    if isinstance(rule, UniformSubset):
        if len(A) != rule.L or len(set(A)) != rule.L:
            return 0.0
        return 1.0 / math.comb(rule.m, rule.L)
    if isinstance(rule, CycleBlock):
        if rule.L == rule.m:
            return 1.0 if A == tuple(range(rule.m)) else 0.0
        starts = sum(1 for s in range(rule.m) if _cycle_block(rule.m, s, rule.L) == A)
        return starts / rule.m
    if isinstance(rule, PartitionBlock):
        if len(A) != rule.ell or A[0] % rule.ell != 0 or A != tuple(range(A[0], A[0] + rule.ell)):
            return 0.0
        return 1.0 / rule.k
    if len(A) != 2:
        return 0.0
    n1 = sum(w)
    n0 = rule.m - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("treated/control pair needs both arms nonempty")
    if w[A[0]] + w[A[1]] != 1:
        return 0.0
    return 1.0 / (n1 * n0)


def enumerate_index_sets(
    rule: IndexRule,
    w: TreatmentVector,
    cap: int = DEFAULT_RULE_CAP,
) -> list[tuple[IndexSet, float]]:
    """All update sets with positive mass given w, paired with their masses."""
    _check_length(rule, w)
    if isinstance(rule, SingleUniform):
        return [((j,), 1.0 / rule.m) for j in range(rule.m)]
    if isinstance(rule, UniformSubset):
        count = math.comb(rule.m, rule.L)
        if count > cap:
            raise SupportSizeError(f"C({rule.m},{rule.L})={count} exceeds cap {cap}")
        mass = 1.0 / count
        return [(A, mass) for A in itertools.combinations(range(rule.m), rule.L)]
    if isinstance(rule, CycleBlock):
        if rule.L == rule.m:
            return [(tuple(range(rule.m)), 1.0)]
        return [(_cycle_block(rule.m, s, rule.L), 1.0 / rule.m) for s in range(rule.m)]
    if isinstance(rule, PartitionBlock):
        mass = 1.0 / rule.k
        return [
            (tuple(range(b * rule.ell, (b + 1) * rule.ell)), mass)
            for b in range(rule.k)
        ]
    treated = [j for j, b in enumerate(w) if b == 1]
    control = [j for j, b in enumerate(w) if b == 0]
    if not treated or not control:
        raise ValueError("treated/control pair needs both arms nonempty")
    mass = 1.0 / (len(treated) * len(control))
    return [
        (tuple(sorted((j, k))), mass)
        for j in treated
        for k in control
    ]
