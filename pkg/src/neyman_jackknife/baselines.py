"""Closed-form comparators: the classical two-arm variance estimator and the
sample-centered circular-Bartlett long-run variance estimator, together with
the exact identities tying them to the deletion-recomputation estimator."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import nj_exact
from .design import Bernoulli, CompletelyRandomized, TreatmentVector
from .errors import DegenerateRealizationError
from .indexrules import CycleBlock, TreatedControlPair
from .outcomemodel import (
    DiffInMeans,
    IpwDirect,
    PotentialOutcomeModel,
    observed_outcomes,
    psi_terms,
)
from .proxy import NeymanPair, RecomputedAverage


def circular_distance(n: int, j: int, k: int) -> int:
    d = abs(j - k) % n
    return min(d, n - d)


@dataclass(frozen=True, eq=False)
class CircularBartlett:
    """Triangular lag weights on circular distance: B_jk = (1 - d(j,k)/(lag+1))_+."""

    n: int
    lag: int

    def __post_init__(self):
        if not 0 <= self.lag <= (self.n - 1) // 2:
            raise ValueError(
                f"lag={self.lag} outside 0..floor((n-1)/2)={(self.n - 1) // 2}"
            )

    @cached_property
    def matrix(self) -> np.ndarray:
        idx = np.arange(self.n)
        d = np.abs(idx[:, None] - idx[None, :])
        d = np.minimum(d, self.n - d)
        return np.maximum(0.0, 1.0 - d / (self.lag + 1))


def neyman_classical(y: np.ndarray, w: TreatmentVector) -> float:
    """S_T/n1 + S_C/n0 with within-arm sample variances (ddof 1)."""
    y = np.asarray(y, dtype=float)
    wv = np.asarray(w)
    y_t = y[wv == 1]
    y_c = y[wv == 0]
    if len(y_t) < 2 or len(y_c) < 2:
        raise DegenerateRealizationError("both arms need at least two units")
    return float(y_t.var(ddof=1) / len(y_t) + y_c.var(ddof=1) / len(y_c))


def newey_west(psis: np.ndarray, lag: int) -> float:
    """(1/n^2) x' B x with x the centered per-unit terms and B circular Bartlett."""
    psis = np.asarray(psis, dtype=float)
    n = len(psis)
    bartlett = CircularBartlett(n, lag)
    x = psis - psis.mean()
    return float(x @ bartlett.matrix @ x) / (n * n)


def neyman_identity_check(y: np.ndarray, w: TreatmentVector) -> tuple[float, float]:
    """Pair-deletion estimator vs. its closed form; equal realization by realization.

    Left side: the exact-sum estimator under the completely randomized design
    with treated/control-pair update sets and the drop-one-per-arm proxy.
    Right side: (2/n) (n0/(n1-1) S_T + n1/(n0-1) S_C).
    """
    y = np.asarray(y, dtype=float)
    wv = np.asarray(w)
    n = len(y)
    n1 = int(wv.sum())
    n0 = n - n1
    if n1 < 2 or n0 < 2:
        raise DegenerateRealizationError("both arms need at least two units")
    design = CompletelyRandomized(n, n1)
    model = PotentialOutcomeModel.from_local(
        exposure_sets=[(i,) for i in range(n)],
        local_fns=[lambda bits, yi=float(yi): yi for yi in y],  # outcomes frozen at y
        m=n,
    )
    gap = n / (2.0 * n1 * n0)
    report = nj_exact(
        design, TreatedControlPair(n), DiffInMeans(), NeymanPair(), model, tuple(wv), gap
    )
    s_t = float(y[wv == 1].var(ddof=1))
    s_c = float(y[wv == 0].var(ddof=1))
    closed = (2.0 / n) * (n0 / (n1 - 1) * s_t + n1 / (n0 - 1) * s_c)
    return report.v_hat, closed


def nw_identity_check(
    model: PotentialOutcomeModel,
    est: IpwDirect,
    design: Bernoulli,
    w: TreatmentVector,
    L: int,
    M: int,
) -> tuple[float, float]:
    """Block-deletion estimator vs. the scaled circular-Bartlett form.

    Requires exposure sets that are radius-M windows on the cycle, so the
    deletion set of a length-L block is the (L+2M)-padded block. Equal
    realization by realization:

        lhs = ((L+2M)/L) * (n/(n-L-2M))^2 * rhs_quadratic_form.
    """
    n = model.n
    if model.m != n:
        raise ValueError("cycle identity needs matched unit counts")
    lag = L + 2 * M - 1
    if not 0 <= lag <= (n - 1) // 2:
        raise ValueError("need L + 2M - 1 <= floor((n-1)/2) for unambiguous distances")
    for i, ns in enumerate(model.exposure_sets):
        window = tuple(sorted((i + d) % n for d in range(-M, M + 1)))
        if tuple(sorted(ns)) != window:
            raise ValueError("exposure sets must be radius-M windows")
    report = nj_exact(
        design, CycleBlock(n, L), est, RecomputedAverage(), model, w, L / n
    )
    psis = psi_terms(est, w, observed_outcomes(model, w))
    scale = (L + 2 * M) / L * (n / (n - L - 2 * M)) ** 2
    return report.v_hat, scale * newey_west(psis, lag)
