"""Spectral gaps of the conditional-rerandomization kernel.

The kernel P(w, w') averages, over the update-set law, the probability that
one rerandomization step maps w to w'. It is reversible with respect to the
design, so after the stationary similarity transform it is a real symmetric
matrix; a cyclic Jacobi sweep then yields the full spectrum, which serves as
the exact oracle against the closed-form gap formulas:

  * Bernoulli design, any treatment-independent rule: gap = min_j P(j in S).
  * Completely randomized design, size-symmetric rule:
    gap = (E|S| - 1 + P(S = empty)) / (m - 1).
  * Completely randomized design, treated/control pair: gap = m / (2 n1 n0).

For the completely randomized design with a uniform size-L update set, the
full eigenvalue family is available in closed form via degree d = 0..min(n1, n0):

  lambda_d = (L+1)/(m-2d+1) * (C(m-d+1, L+1) - C(d, L+1)) / C(m, L)

with multiplicity C(m, d) - C(m, d-1).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .design import (
    Bernoulli,
    CompletelyRandomized,
    Design,
    DEFAULT_SUPPORT_CAP,
    TreatmentVector,
    conditional_pmf,
    conditional_support,
    design_pmf,
    enumerate_support,
)
from .errors import NoClosedFormError, NonReversibleKernelError
from .indexrules import IndexRule, TreatedControlPair, enumerate_index_sets

ROW_SUM_TOL = 1e-12
DETAILED_BALANCE_TOL = 1e-12
SYMMETRY_RESIDUAL_TOL = 1e-10
JACOBI_OFFDIAG_TOL = 1e-12


@dataclass(frozen=True)
class SpectralGap:
    """One minus the second-largest kernel eigenvalue."""

    value: float
    method: str  # "closed-form" | "eigen"

    def __post_init__(self):
        if not 0.0 < self.value <= 1.0 + 1e-12:
            raise ValueError(f"spectral gap {self.value} outside (0, 1]")


@dataclass(frozen=True)
class TransitionKernel:
    """Row-stochastic rerandomization kernel on the enumerated design support."""

    states: tuple[TreatmentVector, ...]
    matrix: np.ndarray
    stationary: np.ndarray

    def row_sum_violation(self) -> float:
        return float(np.max(np.abs(self.matrix.sum(axis=1) - 1.0)))

    def detailed_balance_violation(self) -> float:
        flux = self.stationary[:, None] * self.matrix
        return float(np.max(np.abs(flux - flux.T)))

    def validate(self) -> None:
        v = self.row_sum_violation()
        if v > ROW_SUM_TOL:
            raise NonReversibleKernelError(f"row sums off by {v:.3e}")
        v = self.detailed_balance_violation()
        if v > DETAILED_BALANCE_TOL:
            raise NonReversibleKernelError(f"detailed balance violated by {v:.3e}")


def _resample_factor(p: float) -> np.ndarray:
    # one-coordinate refresh: rows identical, columns weighted (1-p, p)
    return np.array([[1.0 - p, p], [1.0 - p, p]])


def _bernoulli_kernel(design: Bernoulli, rule: IndexRule, cap: int) -> np.ndarray:
    # Treatment-independent rules admit a tensor-product assembly: for a fixed
    # update set the step factorizes over coordinates (refresh inside, identity
    # outside). State order is lexicographic, i.e. unit 0 is the slowest bit.
    sets = enumerate_index_sets(rule, (0,) * design.m, cap=cap)
    size = 1 << design.m
    matrix = np.zeros((size, size))
    eye = np.eye(2)
    for subset, mass in sets:
        inside = set(subset)
        block = np.ones((1, 1))
        for j in range(design.m):
            factor = _resample_factor(design.probs[j]) if j in inside else eye
            block = np.kron(block, factor)
        matrix += mass * block
    return matrix


def _generic_kernel(
    design: Design,
    rule: IndexRule,
    states: list[TreatmentVector],
    cap: int,
) -> np.ndarray:
    index = {w: i for i, w in enumerate(states)}
    matrix = np.zeros((len(states), len(states)))
    for i, w in enumerate(states):
        for subset, mass in enumerate_index_sets(rule, w, cap=cap):
            for w_prime, cond in conditional_support(design, subset, w):
                matrix[i, index[w_prime]] += mass * cond
    return matrix


def build_transition_kernel(
    design: Design,
    rule: IndexRule,
    cap: int = DEFAULT_SUPPORT_CAP,
) -> TransitionKernel:
    """Assemble P(w, w') = sum_A P(S=A | w) * P(rerandomize A maps w to w')."""
    states = enumerate_support(design, cap=cap)
    if isinstance(design, Bernoulli) and rule.w_independent:
        matrix = _bernoulli_kernel(design, rule, cap)
    else:
        matrix = _generic_kernel(design, rule, states, cap)
    stationary = np.array([design_pmf(design, w) for w in states])
    kernel = TransitionKernel(tuple(states), matrix, stationary)
    kernel.validate()
    return kernel


def symmetrized(kernel: TransitionKernel) -> np.ndarray:
    """Similarity transform D^{1/2} P D^{-1/2} with D = diag(stationary)."""
    root = np.sqrt(kernel.stationary)
    sym = kernel.matrix * (root[:, None] / root[None, :])
    residual = float(np.max(np.abs(sym - sym.T)))
    if residual > SYMMETRY_RESIDUAL_TOL:
        raise NonReversibleKernelError(f"symmetrized residual {residual:.3e}")
    return 0.5 * (sym + sym.T)


def jacobi_eigenvalues(matrix: np.ndarray, tol: float = JACOBI_OFFDIAG_TOL) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps rotate away off-diagonal entries until the off-diagonal Frobenius
    norm drops below `tol`. Entries already negligible relative to the target
    are skipped, which makes late sweeps cheap.
    """
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 1:
        return a.diagonal().copy()

    def offdiag_norm() -> float:
        off = a - np.diag(a.diagonal())
        return float(np.sqrt(np.sum(off * off)))

    skip = tol / (2.0 * n)
    for sweep in range(101):
        if offdiag_norm() <= tol:
            break
        if sweep == 100:
            raise NonReversibleKernelError("Jacobi sweep failed to converge")
        for p in range(n - 1):
            row = a[p]
            for q in range(p + 1, n):
                apq = row[q]
                if abs(apq) <= skip:
                    continue
                app, aqq = a[p, p], a[q, q]
                theta = 0.5 * (aqq - app) / apq
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
    return np.sort(a.diagonal())


def kernel_spectrum(kernel: TransitionKernel) -> np.ndarray:
    """All kernel eigenvalues, ascending (real by reversibility)."""
    return jacobi_eigenvalues(symmetrized(kernel))


def spectral_gap_eigen(kernel: TransitionKernel) -> SpectralGap:
    """Exact-oracle gap: one minus the second-largest eigenvalue."""
    spectrum = kernel_spectrum(kernel)
    if len(spectrum) < 2:
        raise ValueError("kernel has a single state; gap undefined")
    return SpectralGap(value=float(1.0 - spectrum[-2]), method="eigen")


def _inclusion_probabilities(rule: IndexRule) -> np.ndarray:
    probs = np.zeros(rule.m)
    for subset, mass in enumerate_index_sets(rule, (0,) * rule.m):
        for j in subset:
            probs[j] += mass
    return probs


def spectral_gap_closed_form(design: Design, rule: IndexRule) -> SpectralGap:
    """Closed-form gap where a formula covers the design/rule pair."""
    if isinstance(design, Bernoulli):
        if not rule.w_independent:
            raise NoClosedFormError(
                "Bernoulli closed form needs a treatment-independent rule"
            )
        value = float(np.min(_inclusion_probabilities(rule)))
        if value <= 0.0:
            raise ValueError("some unit is never updated; the chain is reducible")
        return SpectralGap(value=value, method="closed-form")
    if isinstance(rule, TreatedControlPair):
        return SpectralGap(
            value=design.m / (2.0 * design.n1 * design.n0), method="closed-form"
        )
    if not (rule.w_independent and rule.size_symmetric):
        raise NoClosedFormError(
            "completely randomized closed form needs a size-symmetric rule"
        )
    expected_size = 0.0
    empty_mass = 0.0
    for subset, mass in enumerate_index_sets(rule, (0,) * rule.m):
        expected_size += mass * len(subset)
        if not subset:
            empty_mass += mass
    value = (expected_size - 1.0 + empty_mass) / (design.m - 1)
    if value <= 0.0:
        raise ValueError("degenerate update rule: gap 0 (singletons fix the slice)")
    return SpectralGap(value=value, method="closed-form")


def crd_eigenvalue_formula(m: int, L: int, d: int) -> float:
    """Degree-d eigenvalue of the uniform size-L update on the size-n1 slice."""
    if not 1 <= L <= m:
        raise ValueError(f"need 1 <= L <= m, got L={L}, m={m}")
    if not 0 <= d <= m // 2:
        raise ValueError(f"degree d={d} outside 0..floor(m/2)={m // 2}")
    if d == 0:
        return 1.0
    num = math.comb(m - d + 1, L + 1) - math.comb(d, L + 1)
    return (L + 1) / (m - 2 * d + 1) * num / math.comb(m, L)


def crd_eigenvalue_multiplicity(m: int, n1: int, d: int) -> int:
    """Dimension of the degree-d eigenspace on the slice with n1 treated units."""
    if not 0 <= d <= min(n1, m - n1):
        raise ValueError(f"degree d={d} outside 0..min(n1, n0)")
    if d == 0:
        return 1
    return math.comb(m, d) - math.comb(m, d - 1)


def dump_kernel_csv(kernel: TransitionKernel, path) -> None:
    """Row-major dump in canonical state order, for debugging."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state"] + ["".join(map(str, w)) for w in kernel.states])
        for w, row in zip(kernel.states, kernel.matrix):
            writer.writerow(["".join(map(str, w))] + [f"{x:.17g}" for x in row])
