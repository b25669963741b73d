"""The variance estimator and its exact enumeration audits.

Given a realized assignment, the estimator averages squared gaps between the
full-sample statistic and its proxy recomputations over the update-set law,
scaled by the reciprocal spectral gap. Exact oracles enumerate the design
support to produce the true randomization variance, the oracle conditional-
expectation bound, the estimator's exact expectation, and the proxy's
deviation from measurability, so every conservativeness claim is checkable to
floating precision on desk-scale instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .design import (
    Design,
    DEFAULT_SUPPORT_CAP,
    TreatmentVector,
    conditional_support,
    design_pmf,
    enumerate_support,
)
from .errors import IdentityCheckError
from .indexrules import IndexRule, IndexSet, enumerate_index_sets, index_set_pmf, sample_index_set
from .outcomemodel import (
    Estimator,
    PotentialOutcomeModel,
    estimate,
    observed_outcomes,
)
from .proxy import EstimationContext, ProxyBase
from .spectral import SpectralGap

ROBUST_IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class VarianceReport:
    """A variance estimate plus how it was produced."""

    v_hat: float
    gap: SpectralGap
    mode: str  # "exact-sum" | "monte-carlo"
    replicates: int | None = None
    degenerate_count: int = 0

    def __post_init__(self):
        if self.v_hat < 0.0:
            raise ValueError("variance estimate must be nonnegative")
        if self.mode == "monte-carlo" and (self.replicates is None or self.replicates < 1):
            raise ValueError("monte-carlo mode needs replicates >= 1")


@dataclass(frozen=True)
class ExactAudit:
    """Exact enumeration audit of the estimator's expectation."""

    true_var: float
    expected_vhat: float
    ub_oracle: float
    approx_error: float  # expected_vhat - ub_oracle, signed


class SlackResult(NamedTuple):
    """Proxy deviation from measurability, by two independent routes."""

    direct: float
    paired: float


def as_gap(gap) -> SpectralGap:
    if isinstance(gap, SpectralGap):
        return gap
    return SpectralGap(value=float(gap), method="closed-form")


def nj_exact(
    design: Design,
    rule: IndexRule,
    est: Estimator,
    proxy: ProxyBase,
    model: PotentialOutcomeModel,
    w: TreatmentVector,
    gap,
) -> VarianceReport:
    """Exact sum over the update-set support at the realized assignment."""
    gap = as_gap(gap)
    ctx = EstimationContext(design, model, est)
    y = observed_outcomes(model, w)
    f = estimate(est, w, y)
    total = 0.0
    degenerate = 0
    for subset, mass in enumerate_index_sets(rule, w):
        value, fb = proxy.evaluate_info(ctx, subset, w)
        degenerate += int(fb)
        total += mass * (f - value) ** 2
    return VarianceReport(
        v_hat=total / gap.value,
        gap=gap,
        mode="exact-sum",
        degenerate_count=degenerate,
    )


def nj_monte_carlo(
    design: Design,
    rule: IndexRule,
    est: Estimator,
    proxy: ProxyBase,
    model: PotentialOutcomeModel,
    w: TreatmentVector,
    gap,
    replicates: int,
    rng: np.random.Generator,
) -> VarianceReport:
    """Monte Carlo average over update sets drawn i.i.d. from the rule."""
    if replicates < 1:
        raise ValueError("need at least one replicate")
    gap = as_gap(gap)
    ctx = EstimationContext(design, model, est)
    y = observed_outcomes(model, w)
    f = estimate(est, w, y)
    total = 0.0
    degenerate = 0
    for _ in range(replicates):
        subset = sample_index_set(rule, w, rng)
        value, fb = proxy.evaluate_info(ctx, subset, w)
        degenerate += int(fb)
        total += (f - value) ** 2
    return VarianceReport(
        v_hat=total / (gap.value * replicates),
        gap=gap,
        mode="monte-carlo",
        replicates=replicates,
        degenerate_count=degenerate,
    )


def true_variance_exact(
    design: Design,
    est: Estimator,
    model: PotentialOutcomeModel,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> float:
    """Var(f(W)) by exact support enumeration."""
    mean = 0.0
    second = 0.0
    for w in enumerate_support(design, cap=cap):
        mass = design_pmf(design, w)
        f = estimate(est, w, observed_outcomes(model, w))
        mean += mass * f
        second += mass * f * f
    return second - mean * mean


def tilted_conditional_law(
    design: Design,
    rule: IndexRule,
    A: IndexSet,
    w: TreatmentVector,
) -> list[tuple[TreatmentVector, float]]:
    """Law of W given (update set = A, coordinates off A frozen at w).

    Conditioning on the realized update set reweights the design-conditional
    law by the rule mass the set receives at each compatible state; for
    treatment-independent rules the weights cancel and the design conditional
    is returned unchanged.
    """
    base = conditional_support(design, tuple(A), w)
    if rule.w_independent:
        return base
    weighted = [
        (w_prime, mass * index_set_pmf(rule, w_prime, A)) for w_prime, mass in base
    ]
    total = sum(mass for _, mass in weighted)
    if total <= 0.0:
        raise ValueError("update set has zero conditional mass at every compatible state")
    return [(w_prime, mass / total) for w_prime, mass in weighted]


def _masked_key(A: IndexSet, w: TreatmentVector):
    hidden = set(A)
    return A, tuple(None if j in hidden else b for j, b in enumerate(w))


def ub_oracle_exact(
    design: Design,
    rule: IndexRule,
    est: Estimator,
    model: PotentialOutcomeModel,
    gap,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> float:
    """Oracle bound: mean squared gap to the exact conditional expectation, over gap."""
    gap = as_gap(gap)
    states = enumerate_support(design, cap=cap)
    f_vals = {
        w: estimate(est, w, observed_outcomes(model, w)) for w in states
    }
    cond_mean: dict = {}
    total = 0.0
    for w in states:
        mass_w = design_pmf(design, w)
        f = f_vals[w]
        for subset, mu in enumerate_index_sets(rule, w):
            key = _masked_key(subset, w)
            h = cond_mean.get(key)
            if h is None:
                h = sum(
                    mass * f_vals[w_prime]
                    for w_prime, mass in tilted_conditional_law(design, rule, subset, w)
                )
                cond_mean[key] = h
            total += mass_w * mu * (f - h) ** 2
    return total / gap.value


def expected_vhat_exact(
    design: Design,
    rule: IndexRule,
    est: Estimator,
    proxy: ProxyBase,
    model: PotentialOutcomeModel,
    gap,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> ExactAudit:
    """Exact expectation of the estimator plus its conservativeness decomposition."""
    gap = as_gap(gap)
    ctx = EstimationContext(design, model, est)
    states = enumerate_support(design, cap=cap)
    proxy_cache: dict = {}
    expected = 0.0
    for w in states:
        mass_w = design_pmf(design, w)
        f = estimate(est, w, observed_outcomes(model, w))
        for subset, mu in enumerate_index_sets(rule, w):
            if proxy.strict:
                key = _masked_key(subset, w)
                g = proxy_cache.get(key)
                if g is None:
                    g = proxy.evaluate(ctx, subset, w)
                    proxy_cache[key] = g
            else:
                g = proxy.evaluate(ctx, subset, w)
            expected += mass_w * mu * (f - g) ** 2
    expected /= gap.value
    true_var = true_variance_exact(design, est, model, cap=cap)
    oracle = ub_oracle_exact(design, rule, est, model, gap, cap=cap)
    return ExactAudit(
        true_var=true_var,
        expected_vhat=expected,
        ub_oracle=oracle,
        approx_error=expected - oracle,
    )


def proxy_mse_exact(
    design: Design,
    rule: IndexRule,
    est: Estimator,
    proxy: ProxyBase,
    model: PotentialOutcomeModel,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> float:
    """E[(g - E[f | update set, frozen coordinates])^2] by exact enumeration."""
    ctx = EstimationContext(design, model, est)
    states = enumerate_support(design, cap=cap)
    f_vals = {w: estimate(est, w, observed_outcomes(model, w)) for w in states}
    cond_mean: dict = {}
    total = 0.0
    for w in states:
        mass_w = design_pmf(design, w)
        for subset, mu in enumerate_index_sets(rule, w):
            key = _masked_key(subset, w)
            h = cond_mean.get(key)
            if h is None:
                h = sum(
                    mass * f_vals[w_prime]
                    for w_prime, mass in tilted_conditional_law(design, rule, subset, w)
                )
                cond_mean[key] = h
            g = proxy.evaluate(ctx, subset, w)
            total += mass_w * mu * (g - h) ** 2
    return total


def robust_slack_exact(
    design: Design,
    rule: IndexRule,
    est: Estimator,
    proxy: ProxyBase,
    model: PotentialOutcomeModel,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> SlackResult:
    """Proxy deviation from measurability, two ways that must agree.

    Direct route: mean squared gap between the proxy and its own conditional
    expectation given (update set, frozen coordinates). Paired route: half the
    mean squared difference of the proxy across one rerandomization step. The
    routes must agree to 1e-10; disagreement raises.
    """
    ctx = EstimationContext(design, model, est)
    states = enumerate_support(design, cap=cap)
    direct = 0.0
    paired = 0.0
    for w in states:
        mass_w = design_pmf(design, w)
        for subset, mu in enumerate_index_sets(rule, w):
            law = tilted_conditional_law(design, rule, subset, w)
            g_here = proxy.evaluate(ctx, subset, w)
            g_vals = [
                (proxy.evaluate(ctx, subset, w_prime), mass) for w_prime, mass in law
            ]
            g_bar = sum(g * mass for g, mass in g_vals)
            direct += mass_w * mu * (g_here - g_bar) ** 2
            paired += (
                mass_w
                * mu
                * 0.5
                * sum(mass * (g_here - g) ** 2 for g, mass in g_vals)
            )
    if abs(direct - paired) > ROBUST_IDENTITY_TOL:
        raise IdentityCheckError(
            f"slack routes disagree: direct={direct!r}, paired={paired!r}"
        )
    return SlackResult(direct=direct, paired=paired)


@dataclass(frozen=True)
class OracleProxy(ProxyBase):
    """The exact conditional expectation itself, by enumeration (testing aid)."""

    rule: IndexRule

    strict = True

    def evaluate_info(self, ctx, A, w):
        law = tilted_conditional_law(ctx.design, self.rule, A, w)
        value = 0.0
        for w_prime, mass in law:
            y = observed_outcomes(ctx.model, w_prime)
            value += mass * estimate(ctx.est, w_prime, y)
        return value, False
