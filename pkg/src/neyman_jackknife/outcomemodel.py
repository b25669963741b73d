"""Fixed potential outcomes, exposure indicators, and treatment-effect estimators.

Outcomes are deterministic functions of the treatment vector; each outcome
unit i declares an exposure set of intervention units that can move its
outcome. Models built through `from_tables` / `from_local` are responsive to
their declared sets by construction; models whose true dependence is wider
(e.g. carryover dynamics summarized by a local approximation) carry
``exact_exposure=False`` and are treated as approximately measurable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .design import (
    Bernoulli,
    Design,
    DEFAULT_SUPPORT_CAP,
    TreatmentVector,
    conditional_support,
    design_pmf,
    enumerate_support,
)
from .errors import DegenerateRealizationError
from .indexrules import IndexSet

OutcomeFn = Callable[[int, TreatmentVector], float]


@dataclass(frozen=True, eq=False)
class PotentialOutcomeModel:
    """n outcome units responding to m intervention units through exposure sets."""

    n: int
    m: int
    exposure_sets: tuple[tuple[int, ...], ...]
    outcome_fn: OutcomeFn
    covariates: np.ndarray | None = None
    exact_exposure: bool = True

    def __post_init__(self):
        if len(self.exposure_sets) != self.n:
            raise ValueError("need one exposure set per outcome unit")
        for ns in self.exposure_sets:
            for j in ns:
                if not 0 <= j < self.m:
                    raise ValueError(f"exposure index {j} outside [0, {self.m})")
        if self.covariates is not None and len(self.covariates) != self.n:
            raise ValueError("need one covariate per outcome unit")

    @cached_property
    def exposure_matrix(self) -> np.ndarray:
        """Boolean incidence (n, m): entry (i, j) marks j in the i-th exposure set."""
        inc = np.zeros((self.n, self.m), dtype=bool)
        for i, ns in enumerate(self.exposure_sets):
            inc[i, list(ns)] = True
        return inc

    @classmethod
    def from_tables(
        cls,
        exposure_sets,
        tables,
        m: int,
        covariates=None,
    ) -> "PotentialOutcomeModel":
        """Build from per-unit lookup tables over local exposure patterns.

        ``tables[i]`` maps the integer encoding of the bits of w restricted to
        the (sorted) exposure set to the outcome value; responsiveness holds by
        construction because only those bits are read.
        """
        sets = tuple(tuple(sorted(ns)) for ns in exposure_sets)
        frozen = tuple(tuple(float(v) for v in t) for t in tables)
        for ns, t in zip(sets, frozen):
            if len(t) != 1 << len(ns):
                raise ValueError("table size must be 2^|exposure set|")

        def fn(i: int, w: TreatmentVector) -> float:
            key = 0
            for pos, j in enumerate(sets[i]):
                key |= w[j] << pos
            return frozen[i][key]

        cov = None if covariates is None else np.asarray(covariates, dtype=float)
        return cls(len(sets), m, sets, fn, covariates=cov)

    @classmethod
    def from_local(
        cls,
        exposure_sets,
        local_fns,
        m: int,
        covariates=None,
    ) -> "PotentialOutcomeModel":
        """Build from callables of the restriction of w to each exposure set."""
        sets = tuple(tuple(sorted(ns)) for ns in exposure_sets)
        fns = tuple(local_fns)

        def fn(i: int, w: TreatmentVector) -> float:
            return float(fns[i](tuple(w[j] for j in sets[i])))

        cov = None if covariates is None else np.asarray(covariates, dtype=float)
        return cls(len(sets), m, sets, fn, covariates=cov)


def observed_outcomes(model: PotentialOutcomeModel, w: TreatmentVector) -> np.ndarray:
    """Evaluate every outcome unit at the assignment w."""
    if len(w) != model.m:
        raise ValueError(f"treatment vector length {len(w)} != m={model.m}")
    return np.array([model.outcome_fn(i, w) for i in range(model.n)], dtype=float)


# ---------------------------------------------------------------------------
# exposure indicators


@dataclass(frozen=True)
class OwnTreatment:
    """T = w_j."""

    j: int

    @property
    def units(self) -> tuple[int, ...]:
        return (self.j,)

    def value(self, w: TreatmentVector) -> int:
        return int(w[self.j])


@dataclass(frozen=True)
class AllTreated:
    """T = 1 iff every listed unit is treated."""

    subset: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "subset", tuple(sorted(set(self.subset))))
        if not self.subset:
            raise ValueError("indicator subset must be nonempty")

    @property
    def units(self) -> tuple[int, ...]:
        return self.subset

    def value(self, w: TreatmentVector) -> int:
        return int(all(w[j] == 1 for j in self.subset))


@dataclass(frozen=True)
class AllControl:
    """T = 1 iff every listed unit is in control."""

    subset: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "subset", tuple(sorted(set(self.subset))))
        if not self.subset:
            raise ValueError("indicator subset must be nonempty")

    @property
    def units(self) -> tuple[int, ...]:
        return self.subset

    def value(self, w: TreatmentVector) -> int:
        return int(all(w[j] == 0 for j in self.subset))


ExposureIndicator = OwnTreatment | AllTreated | AllControl


def exposure_prob(
    ind: ExposureIndicator,
    design: Design,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> float:
    """P(indicator = 1) under the design; closed form under Bernoulli."""
    if isinstance(design, Bernoulli):
        if isinstance(ind, OwnTreatment):
            return design.probs[ind.j]
        mass = 1.0
        for j in ind.units:
            p = design.probs[j]
            mass *= p if isinstance(ind, AllTreated) else 1.0 - p
        return mass
    total = 0.0
    for w in enumerate_support(design, cap=cap):
        if ind.value(w):
            total += design_pmf(design, w)
    return total


def conditional_exposure_prob(
    ind: ExposureIndicator,
    design: Design,
    A: IndexSet,
    w: TreatmentVector,
) -> float:
    """P(indicator = 1 | coordinates in A redrawn, the rest frozen at w).

    Under Bernoulli this is a product of fresh probabilities over units in A
    and frozen indicator bits outside; for other designs it is an exact sum
    over the conditional law of the refreshed coordinates.
    """
    inside = set(A)
    if isinstance(design, Bernoulli):
        control = isinstance(ind, AllControl)
        mass = 1.0
        for j in ind.units:
            if j in inside:
                p = design.probs[j]
                mass *= 1.0 - p if control else p
            else:
                bit = 1 - w[j] if control else w[j]
                if bit == 0:
                    return 0.0
        return mass
    total = 0.0
    for w_prime, mass in conditional_support(design, tuple(A), w):
        if ind.value(w_prime):
            total += mass
    return total


# ---------------------------------------------------------------------------
# estimators


@dataclass(frozen=True)
class IpwDirect:
    """(1/n) sum_i (T_i/p_i - (1-T_i)/(1-p_i)) Y_i with known exposure probs."""

    indicators: tuple[ExposureIndicator, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.indicators) != len(self.probs):
            raise ValueError("need one probability per indicator")
        for p in self.probs:
            if not 0.0 < p < 1.0:
                raise ValueError(f"exposure probability {p} outside open (0, 1)")


@dataclass(frozen=True)
class IpwTot:
    """(1/n) sum_i (1{all exposed treated}/p_i - 1{all exposed control}/q_i) Y_i."""

    treat_indicators: tuple[AllTreated, ...]
    treat_probs: tuple[float, ...]
    control_indicators: tuple[AllControl, ...]
    control_probs: tuple[float, ...]

    def __post_init__(self):
        lens = {
            len(self.treat_indicators),
            len(self.treat_probs),
            len(self.control_indicators),
            len(self.control_probs),
        }
        if len(lens) != 1:
            raise ValueError("indicator/probability lengths must match")
        for p in (*self.treat_probs, *self.control_probs):
            if not 0.0 < p < 1.0:
                raise ValueError(f"exposure probability {p} outside open (0, 1)")

    @classmethod
    def for_model(cls, model: PotentialOutcomeModel, design: Design) -> "IpwTot":
        treat = tuple(AllTreated(ns) for ns in model.exposure_sets)
        control = tuple(AllControl(ns) for ns in model.exposure_sets)
        return cls(
            treat,
            tuple(exposure_prob(t, design) for t in treat),
            control,
            tuple(exposure_prob(c, design) for c in control),
        )


@dataclass(frozen=True)
class DiffInMeans:
    """Mean outcome of treated units minus mean outcome of control units (m = n)."""


@dataclass(frozen=True)
class HajekBipartite:
    """Ratio-of-sums contrast with exposure indicators on both arms."""

    treat_indicators: tuple[ExposureIndicator, ...]
    treat_probs: tuple[float, ...]
    control_indicators: tuple[ExposureIndicator, ...]
    control_probs: tuple[float, ...]

    def __post_init__(self):
        lens = {
            len(self.treat_indicators),
            len(self.treat_probs),
            len(self.control_indicators),
            len(self.control_probs),
        }
        if len(lens) != 1:
            raise ValueError("indicator/probability lengths must match")
        for p in (*self.treat_probs, *self.control_probs):
            if not 0.0 < p < 1.0:
                raise ValueError(f"exposure probability {p} outside open (0, 1)")


@dataclass(frozen=True)
class CustomEstimator:
    """Arbitrary f(w, y)."""

    fn: Callable[[TreatmentVector, np.ndarray], float]


Estimator = IpwDirect | IpwTot | DiffInMeans | HajekBipartite | CustomEstimator


def psi_terms(est: Estimator, w: TreatmentVector, y: np.ndarray) -> np.ndarray:
    """Per-unit terms for estimators of the form (1/n) sum_i psi_i."""
    if isinstance(est, IpwDirect):
        t = np.array([ind.value(w) for ind in est.indicators], dtype=float)
        p = np.asarray(est.probs)
        return (t / p - (1.0 - t) / (1.0 - p)) * y
    if isinstance(est, IpwTot):
        t = np.array([ind.value(w) for ind in est.treat_indicators], dtype=float)
        c = np.array([ind.value(w) for ind in est.control_indicators], dtype=float)
        p = np.asarray(est.treat_probs)
        q = np.asarray(est.control_probs)
        return (t / p - c / q) * y
    raise TypeError(f"{type(est).__name__} has no per-unit decomposition")


def estimate(est: Estimator, w: TreatmentVector, y: np.ndarray) -> float:
    """Evaluate the estimator at the realized assignment and outcomes."""
    y = np.asarray(y, dtype=float)
    if isinstance(est, (IpwDirect, IpwTot)):
        return float(np.mean(psi_terms(est, w, y)))
    if isinstance(est, DiffInMeans):
        wv = np.asarray(w)
        if len(wv) != len(y):
            raise ValueError("difference in means needs one outcome per unit")
        treated = wv == 1
        if not treated.any() or treated.all():
            raise DegenerateRealizationError("difference in means with an empty arm")
        return float(y[treated].mean() - y[~treated].mean())
    if isinstance(est, HajekBipartite):
        t = np.array([ind.value(w) for ind in est.treat_indicators], dtype=float)
        c = np.array([ind.value(w) for ind in est.control_indicators], dtype=float)
        wt = t / np.asarray(est.treat_probs)
        wc = c / np.asarray(est.control_probs)
        den_t, den_c = wt.sum(), wc.sum()
        if den_t <= 0.0 or den_c <= 0.0:
            raise DegenerateRealizationError("ratio estimator with an empty arm")
        return float((wt * y).sum() / den_t - (wc * y).sum() / den_c)
    return float(est.fn(w, y))


def estimator_function(model: PotentialOutcomeModel, est: Estimator):
    """Curry estimator and model into a function of the treatment vector alone."""

    def f(w: TreatmentVector) -> float:
        return estimate(est, w, observed_outcomes(model, w))

    return f


def total_effect_estimand(model: PotentialOutcomeModel) -> float:
    """(1/n) sum_i (Y_i(all ones) - Y_i(all zeros))."""
    ones = (1,) * model.m
    zeros = (0,) * model.m
    return float(
        np.mean(observed_outcomes(model, ones) - observed_outcomes(model, zeros))
    )


def exposure_contrast_estimand(
    model: PotentialOutcomeModel, indicators: tuple[ExposureIndicator, ...]
) -> float:
    """(1/n) sum_i (Y_i at T_i=1 minus Y_i at T_i=0), for indicator-specified outcomes.

    Only meaningful when each Y_i is a function of its own indicator; the two
    evaluations force the indicator by setting the indicator's units.
    """
    values = []
    for i, ind in enumerate(indicators):
        w_hi = [0] * model.m
        w_lo = [1] * model.m
        for j in ind.units:
            w_hi[j] = 0 if isinstance(ind, AllControl) else 1
            w_lo[j] = 1 if isinstance(ind, AllControl) else 0
        values.append(
            model.outcome_fn(i, tuple(w_hi)) - model.outcome_fn(i, tuple(w_lo))
        )
    return float(np.mean(values))


def responsiveness_violation(
    model: PotentialOutcomeModel,
    rng: np.random.Generator,
    trials: int = 1000,
) -> float:
    """Max |Y_i(w) - Y_i(w')| over random pairs agreeing on the exposure set."""
    worst = 0.0
    for _ in range(trials):
        i = int(rng.integers(model.n))
        w = tuple(int(b) for b in rng.integers(0, 2, size=model.m))
        w_alt = list(int(b) for b in rng.integers(0, 2, size=model.m))
        for j in model.exposure_sets[i]:
            w_alt[j] = w[j]
        delta = abs(model.outcome_fn(i, w) - model.outcome_fn(i, tuple(w_alt)))
        worst = max(worst, delta)
    return worst
