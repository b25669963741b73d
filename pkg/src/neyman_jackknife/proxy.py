"""Computable proxies: recomputations of an estimator with some treatments hidden.

A proxy stands in for the unobservable conditional expectation of the
estimator given the update set and the frozen treatments. Strict proxies read
only treatments outside the update set and outcomes of units whose exposure
sets miss it; that property is executable (`masking_violation`) by scrambling
the hidden coordinates and demanding a bit-identical value. Non-strict
proxies (buffered recomputations on carryover data, user-supplied functions)
opt out via ``strict = False``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .design import Design, TreatmentVector
from .errors import AllDeletedError, DegenerateRealizationError
from .indexrules import IndexSet
from .outcomemodel import (
    Estimator,
    HajekBipartite,
    IpwDirect,
    PotentialOutcomeModel,
    conditional_exposure_prob,
    estimate,
    observed_outcomes,
    psi_terms,
)

COVARIATE_VARIANCE_FLOOR = 1e-12


class EstimationContext(NamedTuple):
    """Everything a proxy may consult besides the update set and treatments."""

    design: Design
    model: PotentialOutcomeModel
    est: Estimator


def deletion_set(exposure_sets, A: IndexSet) -> tuple[int, ...]:
    """Outcome units whose exposure set meets the update set A."""
    hit = set(A)
    return tuple(
        i for i, ns in enumerate(exposure_sets) if any(j in hit for j in ns)
    )


def _deletion_mask(model: PotentialOutcomeModel, A: IndexSet) -> np.ndarray:
    if not A:
        return np.zeros(model.n, dtype=bool)
    sel = np.zeros(model.m, dtype=bool)
    sel[list(A)] = True
    return model.exposure_matrix @ sel


def recomputed_average_proxy(psis: np.ndarray, D) -> float:
    """Mean of the per-unit terms over units surviving the deletion set D."""
    psis = np.asarray(psis, dtype=float)
    if isinstance(D, np.ndarray) and D.dtype == bool:
        keep = ~D
    else:
        keep = np.ones(len(psis), dtype=bool)
        keep[list(D)] = False
    if not keep.any():
        raise AllDeletedError("deletion set covers every outcome unit")
    return float(psis[keep].mean())


@dataclass(frozen=True)
class ArmMeanPredictor:
    """Per-arm affine predictors m(t, x) = intercept[t] + slope[t] * x."""

    intercepts: tuple[float, float]
    slopes: tuple[float, float]
    used_fallback: bool

    def __call__(self, t: int, x: float) -> float:
        return self.intercepts[t] + self.slopes[t] * x


def _fit_single_arm(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    # least squares with intercept; slope zeroed when the covariate is flat
    n = len(y)
    mx = x.mean()
    my = y.mean()
    var = float(np.mean((x - mx) ** 2))
    if var < COVARIATE_VARIANCE_FLOOR:
        return my, 0.0
    slope = float(np.mean((x - mx) * (y - my)) / var)
    return my - slope * mx, slope


def fit_arm_means(
    model: PotentialOutcomeModel,
    est: IpwDirect,
    w: TreatmentVector,
    D,
) -> ArmMeanPredictor:
    """Fit outcome-vs-covariate predictors per exposure arm on surviving units.

    Arms with fewer than two surviving units fall back to the arm's surviving
    mean, and empty arms to the overall surviving mean. Without covariates the
    inverse-propensity arm averages S_T/(n-|D|), S_C/(n-|D|) are used instead.
    """
    y = observed_outcomes(model, w)
    n = model.n
    keep = np.ones(n, dtype=bool)
    if isinstance(D, np.ndarray) and D.dtype == bool:
        keep = ~D
    else:
        keep[list(D)] = False
    if not keep.any():
        raise AllDeletedError("no surviving units to fit on")
    t = np.array([ind.value(w) for ind in est.indicators])

    if model.covariates is None:
        p = np.asarray(est.probs)
        kept = float(keep.sum())
        m1 = float((np.where(keep, t / p, 0.0) * y).sum() / kept)
        m0 = float((np.where(keep, (1 - t) / (1 - p), 0.0) * y).sum() / kept)
        return ArmMeanPredictor((m0, m1), (0.0, 0.0), used_fallback=False)

    x = np.asarray(model.covariates, dtype=float)
    overall = float(y[keep].mean())
    intercepts = [overall, overall]
    slopes = [0.0, 0.0]
    fallback = False
    for arm in (0, 1):
        sel = keep & (t == arm)
        count = int(sel.sum())
        if count >= 2:
            intercepts[arm], slopes[arm] = _fit_single_arm(x[sel], y[sel])
        elif count == 1:
            intercepts[arm] = float(y[sel][0])
            fallback = True
        else:
            fallback = True  # stays at the overall surviving mean
    return ArmMeanPredictor(tuple(intercepts), tuple(slopes), used_fallback=fallback)


def covariate_proxy(
    model: PotentialOutcomeModel,
    est: IpwDirect,
    design: Design,
    A: IndexSet,
    w: TreatmentVector,
) -> float:
    """Regression-imputed recomputation of an inverse-propensity estimator.

    Surviving per-unit terms are kept; deleted units contribute imputed arm
    predictions reweighted by their conditional exposure probability given the
    frozen treatments.
    """
    value, _ = covariate_proxy_info(model, est, design, A, w)
    return value


def covariate_proxy_info(
    model: PotentialOutcomeModel,
    est: IpwDirect,
    design: Design,
    A: IndexSet,
    w: TreatmentVector,
) -> tuple[float, bool]:
    deleted = _deletion_mask(model, A)
    y = observed_outcomes(model, w)
    psis = psi_terms(est, w, y)
    n = model.n
    if not deleted.any():
        return float(psis.mean()), False
    predictor = fit_arm_means(model, est, w, deleted)
    x = model.covariates if model.covariates is not None else np.zeros(n)
    total = float(psis[~deleted].sum())
    for i in np.flatnonzero(deleted):
        p_tilde = conditional_exposure_prob(est.indicators[i], design, A, w)
        p = est.probs[i]
        total += (p_tilde / p) * predictor(1, x[i])
        total -= ((1.0 - p_tilde) / (1.0 - p)) * predictor(0, x[i])
    return total / n, predictor.used_fallback


def neyman_pair_proxy(y: np.ndarray, w: TreatmentVector, pair: tuple[int, int]) -> float:
    """Arm-mean contrast after dropping one treated and one control unit."""
    y = np.asarray(y, dtype=float)
    wv = np.asarray(w)
    j, k = pair
    if not (wv[j] == 1 and wv[k] == 0):
        raise ValueError("pair must be (treated unit, control unit)")
    n1 = int(wv.sum())
    n0 = len(wv) - n1
    if n1 < 2 or n0 < 2:
        raise DegenerateRealizationError("leave-one-out needs both arms of size >= 2")
    sum_t = float(y[wv == 1].sum())
    sum_c = float(y[wv == 0].sum())
    return (sum_t - y[j]) / (n1 - 1) - (sum_c - y[k]) / (n0 - 1)


# ---------------------------------------------------------------------------
# deletion rules and pluggable proxy variants


@dataclass(frozen=True)
class ExposureDeletion:
    """Delete exactly the outcome units whose exposure set meets the update set."""

    strict = True

    def __call__(self, model: PotentialOutcomeModel, A: IndexSet) -> np.ndarray:
        return _deletion_mask(model, A)


@dataclass(frozen=True)
class RightBuffer:
    """Delete the update set plus r following time indices (no wraparound).

    Intended for prefix-dependent time series where m = n and unit t responds
    to treatments up to time t; the buffer absorbs decaying carryover, so
    proxies built on it are only approximately measurable.
    """

    r: int

    strict = False

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("buffer length must be nonnegative")

    def __call__(self, model: PotentialOutcomeModel, A: IndexSet) -> np.ndarray:
        deleted = np.zeros(model.n, dtype=bool)
        if not A:
            return deleted
        deleted[list(A)] = True
        hi = max(A)
        deleted[hi + 1 : min(model.n, hi + 1 + self.r)] = True
        return deleted


class ProxyBase:
    """Interface: evaluate(ctx, A, w) -> value, with a fallback-event variant."""

    strict: bool = True

    def evaluate(self, ctx: EstimationContext, A: IndexSet, w: TreatmentVector) -> float:
        return self.evaluate_info(ctx, A, w)[0]

    def evaluate_info(
        self, ctx: EstimationContext, A: IndexSet, w: TreatmentVector
    ) -> tuple[float, bool]:
        raise NotImplementedError


@dataclass(frozen=True)
class RecomputedAverage(ProxyBase):
    """Drop deleted units and average the remaining per-unit terms."""

    deletion: Callable = ExposureDeletion()

    @property
    def strict(self) -> bool:  # type: ignore[override]
        return getattr(self.deletion, "strict", False)

    def evaluate_info(self, ctx, A, w):
        deleted = self.deletion(ctx.model, A)
        y = observed_outcomes(ctx.model, w)
        psis = psi_terms(ctx.est, w, y)
        return recomputed_average_proxy(psis, deleted), False


@dataclass(frozen=True)
class CovariateRegression(ProxyBase):
    """Regression-imputed recomputation (inverse-propensity estimators only)."""

    strict = True

    def evaluate_info(self, ctx, A, w):
        return covariate_proxy_info(ctx.model, ctx.est, ctx.design, A, w)


@dataclass(frozen=True)
class NeymanPair(ProxyBase):
    """Leave one unit per arm; requires a treated/control pair update set.

    Computed from coordinates outside the pair alone: under a completely
    randomized design the off-pair units contain exactly n1-1 treated and
    n0-1 control units, so the contrast of their arm means equals the
    explicit drop-one-per-arm recomputation.
    """

    strict = True

    def evaluate_info(self, ctx, A, w):
        if len(A) != 2:
            raise ValueError("pair proxy needs a two-element update set")
        design = ctx.design
        n1 = getattr(design, "n1", None)
        if n1 is None:
            raise TypeError("pair proxy requires a completely randomized design")
        n0 = design.m - n1
        if n1 < 2 or n0 < 2:
            raise DegenerateRealizationError("leave-one-out needs both arms of size >= 2")
        y = observed_outcomes(ctx.model, w)
        keep = np.ones(len(w), dtype=bool)
        keep[list(A)] = False
        wv = np.asarray(w)
        sum_t = float(y[keep & (wv == 1)].sum())
        sum_c = float(y[keep & (wv == 0)].sum())
        return sum_t / (n1 - 1) - sum_c / (n0 - 1), False


@dataclass(frozen=True)
class ClassicalLoo(ProxyBase):
    """Leave-one-out recomputation of a per-unit-term estimator.

    Measurable only under unit-level exposure (each unit responds to its own
    treatment alone); pair with singleton update sets.
    """

    denominator: str = "n-1"

    strict = True

    def __post_init__(self):
        if self.denominator not in ("n-1", "n"):
            raise ValueError("denominator must be 'n-1' or 'n'")

    def evaluate_info(self, ctx, A, w):
        if len(A) != 1:
            raise ValueError("leave-one-out proxy needs a singleton update set")
        i = A[0]
        y = observed_outcomes(ctx.model, w)
        psis = psi_terms(ctx.est, w, y)
        keep = np.ones(len(psis), dtype=bool)
        keep[i] = False
        den = len(psis) - 1 if self.denominator == "n-1" else len(psis)
        return float(psis[keep].sum()) / den, False


@dataclass(frozen=True)
class HajekRecompute(ProxyBase):
    """Ratio-of-sums contrast recomputed on the surviving outcome units.

    A surviving arm with zero total weight falls back to the undeleted ratio
    for that arm, and the event is flagged.
    """

    strict = True

    def evaluate_info(self, ctx, A, w):
        est = ctx.est
        if not isinstance(est, HajekBipartite):
            raise TypeError("HajekRecompute requires a HajekBipartite estimator")
        deleted = _deletion_mask(ctx.model, A)
        y = observed_outcomes(ctx.model, w)
        t = np.array([ind.value(w) for ind in est.treat_indicators], dtype=float)
        c = np.array([ind.value(w) for ind in est.control_indicators], dtype=float)
        wt = t / np.asarray(est.treat_probs)
        wc = c / np.asarray(est.control_probs)
        keep = ~deleted
        fallback = False
        sides = []
        for weights in (wt, wc):
            den = float(weights[keep].sum())
            num = float((weights * y)[keep].sum())
            if den <= 0.0:
                den_full = float(weights.sum())
                if den_full <= 0.0:
                    raise DegenerateRealizationError("ratio estimator with an empty arm")
                sides.append(float((weights * y).sum()) / den_full)
                fallback = True
            else:
                sides.append(num / den)
        return sides[0] - sides[1], fallback


@dataclass(frozen=True)
class CustomProxy(ProxyBase):
    """User-supplied g(A, w) evaluated with full access to the context."""

    fn: Callable[[EstimationContext, IndexSet, TreatmentVector], float]
    declared_strict: bool = False

    @property
    def strict(self) -> bool:  # type: ignore[override]
        return self.declared_strict

    def evaluate_info(self, ctx, A, w):
        return float(self.fn(ctx, A, w)), False


def masking_violation(
    proxy: ProxyBase,
    ctx: EstimationContext,
    A: IndexSet,
    w: TreatmentVector,
    rng: np.random.Generator,
    trials: int = 8,
) -> float:
    """Max |g(A, w) - g(A, w scrambled on A)| over random scrambles.

    Zero (bit-identical) for a strict proxy on a model whose declared exposure
    sets are exact.
    """
    base = proxy.evaluate(ctx, A, w)
    worst = 0.0
    for _ in range(trials):
        scrambled = list(w)
        for j in A:
            scrambled[j] = int(rng.integers(2))
        worst = max(worst, abs(proxy.evaluate(ctx, A, tuple(scrambled)) - base))
    return worst
