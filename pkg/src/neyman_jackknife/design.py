"""Randomization designs on binary treatment vectors.

A design is the known law of the length-m treatment vector. Two variants are
supported: independent Bernoulli assignment with per-unit probabilities in the
open interval (0, 1), and the completely randomized design with a fixed number
of treated units. Both support exact pmf evaluation, support enumeration in a
canonical lexicographic order, and the conditional resampling step that
redraws the coordinates in an update set from their law given the rest.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import SupportSizeError

TreatmentVector = tuple[int, ...]

DEFAULT_SUPPORT_CAP = 1 << 20


@dataclass(frozen=True)
class Bernoulli:
    """Independent Ber(probs[j]) assignment; every 2^m state has positive mass."""

    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.probs) == 0:
            raise ValueError("need at least one unit")
        for p in self.probs:
            if not 0.0 < p < 1.0:
                raise ValueError(f"treatment probability {p} outside open (0, 1)")

    @property
    def m(self) -> int:
        return len(self.probs)

    @classmethod
    def uniform(cls, m: int, p: float = 0.5) -> "Bernoulli":
        return cls((p,) * m)


@dataclass(frozen=True)
class CompletelyRandomized:
    """Uniform law over assignments with exactly n1 treated units out of m."""

    m: int
    n1: int

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("completely randomized design needs m >= 2")
        if not 1 <= self.n1 <= self.m - 1:
            raise ValueError(f"n1={self.n1} must satisfy 1 <= n1 <= m-1={self.m - 1}")

    @property
    def n0(self) -> int:
        return self.m - self.n1


Design = Bernoulli | CompletelyRandomized


def validate_treatments(design: Design, w: TreatmentVector) -> None:
    if len(w) != design.m:
        raise ValueError(f"treatment vector length {len(w)} != m={design.m}")
    for b in w:
        if b not in (0, 1):
            raise ValueError(f"non-binary treatment entry {b!r}")


def in_support(design: Design, w: TreatmentVector) -> bool:
    validate_treatments(design, w)
    if isinstance(design, CompletelyRandomized):
        return sum(w) == design.n1
    return True


def sample_treatments(design: Design, rng: np.random.Generator) -> TreatmentVector:
    """Draw one treatment vector from the design."""
    if isinstance(design, Bernoulli):
        u = rng.random(design.m)
        return tuple(int(u[j] < design.probs[j]) for j in range(design.m))
    bits = [0] * design.m
    for j in rng.choice(design.m, size=design.n1, replace=False):
        bits[j] = 1
    return tuple(bits)


def design_pmf(design: Design, w: TreatmentVector) -> float:
    """Probability mass of w under the design (0 off support)."""
    validate_treatments(design, w)
    if isinstance(design, Bernoulli):
        mass = 1.0
        for p, b in zip(design.probs, w):
            mass *= p if b else 1.0 - p
        return mass
    if sum(w) != design.n1:
        return 0.0
    return 1.0 / math.comb(design.m, design.n1)


def support_size(design: Design) -> int:
    if isinstance(design, Bernoulli):
        return 1 << design.m
    return math.comb(design.m, design.n1)


def enumerate_support(design: Design, cap: int = DEFAULT_SUPPORT_CAP) -> list[TreatmentVector]:
    """All states with positive mass, in lexicographic order of the bit sequence."""
    size = support_size(design)
    if size > cap:
        raise SupportSizeError(f"support size {size} exceeds cap {cap}")
    if isinstance(design, Bernoulli):
        return list(itertools.product((0, 1), repeat=design.m))
    states = []
    for ones in itertools.combinations(range(design.m), design.n1):
        bits = [0] * design.m
        for j in ones:
            bits[j] = 1
        states.append(tuple(bits))
    states.sort()
    return states


def gibbs_rerandomize(
    design: Design,
    w: TreatmentVector,
    subset: tuple[int, ...],
    rng: np.random.Generator,
) -> TreatmentVector:
    """Redraw the coordinates in `subset` from their conditional law given the rest.

    Coordinates outside the subset are copied unchanged. Under Bernoulli the
    refreshed bits are independent Ber(probs[j]); under complete randomization
    they are a uniform arrangement of the treated count that the frozen
    coordinates leave unassigned.
    """
    if not in_support(design, w):
        raise ValueError("w is not in the design support")
    bits = list(w)
    subset = tuple(subset)
    if isinstance(design, Bernoulli):
        for j in subset:
            bits[j] = int(rng.random() < design.probs[j])
        return tuple(bits)
    inside = sum(w[j] for j in subset)
    k = design.n1 - (sum(w) - inside)
    if not 0 <= k <= len(subset):
        raise ValueError("conditional law is empty")  # unreachable on support
    for j in subset:
        bits[j] = 0
    if k > 0:
        for pos in rng.choice(len(subset), size=k, replace=False):
            bits[subset[pos]] = 1
    return tuple(bits)


def conditional_pmf(
    design: Design,
    subset: tuple[int, ...],
    w: TreatmentVector,
    w_prime: TreatmentVector,
) -> float:
    """Mass of w_prime under one rerandomization of `subset` starting from w."""
    validate_treatments(design, w)
    validate_treatments(design, w_prime)
    sub = set(subset)
    for j in range(design.m):
        if j not in sub and w[j] != w_prime[j]:
            return 0.0
    if isinstance(design, Bernoulli):
        mass = 1.0
        for j in subset:
            p = design.probs[j]
            mass *= p if w_prime[j] else 1.0 - p
        return mass
    if sum(w_prime) != design.n1:
        return 0.0
    k = sum(w_prime[j] for j in subset)
    return 1.0 / math.comb(len(subset), k)


def conditional_support(
    design: Design,
    subset: tuple[int, ...],
    w: TreatmentVector,
) -> list[tuple[TreatmentVector, float]]:
    """Enumerate the conditional law used by `gibbs_rerandomize` for fixed subset."""
    if not in_support(design, w):
        raise ValueError("w is not in the design support")
    subset = tuple(subset)
    if not subset:
        return [(tuple(w), 1.0)]
    out = []
    if isinstance(design, Bernoulli):
        for pattern in itertools.product((0, 1), repeat=len(subset)):
            bits = list(w)
            mass = 1.0
            for j, b in zip(subset, pattern):
                bits[j] = b
                p = design.probs[j]
                mass *= p if b else 1.0 - p
            out.append((tuple(bits), mass))
        return out
    inside = sum(w[j] for j in subset)
    k = design.n1 - (sum(w) - inside)
    mass = 1.0 / math.comb(len(subset), k)
    for ones in itertools.combinations(range(len(subset)), k):
        bits = list(w)
        for j in subset:
            bits[j] = 0
        for pos in ones:
            bits[subset[pos]] = 1
        out.append((tuple(bits), mass))
    return out
