"""Conservative design-based variance estimation under interference.

The estimator recomputes a treatment-effect statistic with a random update
set of treatments deleted, averages the squared recomputation gaps over the
update-set law, and scales by the reciprocal spectral gap of the induced
rerandomization kernel. Its expectation over the design dominates the true
randomization variance for any proxy that reads only retained treatments.
"""

from .baselines import (
    CircularBartlett,
    circular_distance,
    newey_west,
    neyman_classical,
    neyman_identity_check,
    nw_identity_check,
)
from .core import (
    ExactAudit,
    OracleProxy,
    SlackResult,
    VarianceReport,
    expected_vhat_exact,
    nj_exact,
    nj_monte_carlo,
    proxy_mse_exact,
    robust_slack_exact,
    tilted_conditional_law,
    true_variance_exact,
    ub_oracle_exact,
)
from .design import (
    Bernoulli,
    CompletelyRandomized,
    Design,
    TreatmentVector,
    conditional_pmf,
    conditional_support,
    design_pmf,
    enumerate_support,
    gibbs_rerandomize,
    sample_treatments,
)
from .errors import (
    AllDeletedError,
    ConfigError,
    DegenerateRealizationError,
    IdentityCheckError,
    MonotonicityError,
    NeymanJackknifeError,
    NoClosedFormError,
    NonReversibleKernelError,
    SupportSizeError,
)
from .fourier import (
    FourierExpansion,
    cycle_block_miss_probability,
    dump_coefficients_csv,
    fourier_coefficients,
    inflation_ratio,
    monotonicity_check,
    reconstruct,
    subset_hit_probabilities,
    ub_oracle_fourier,
)
from .indexrules import (
    CycleBlock,
    IndexRule,
    IndexSet,
    PartitionBlock,
    SingleUniform,
    TreatedControlPair,
    UniformSubset,
    enumerate_index_sets,
    index_set_pmf,
    sample_index_set,
)
from .outcomemodel import (
    AllControl,
    AllTreated,
    CustomEstimator,
    DiffInMeans,
    Estimator,
    ExposureIndicator,
    HajekBipartite,
    IpwDirect,
    IpwTot,
    OwnTreatment,
    PotentialOutcomeModel,
    conditional_exposure_prob,
    estimate,
    estimator_function,
    exposure_prob,
    observed_outcomes,
    psi_terms,
    responsiveness_violation,
    total_effect_estimand,
)
from .proxy import (
    ClassicalLoo,
    CovariateRegression,
    CustomProxy,
    EstimationContext,
    ExposureDeletion,
    HajekRecompute,
    NeymanPair,
    RecomputedAverage,
    RightBuffer,
    covariate_proxy,
    deletion_set,
    fit_arm_means,
    masking_violation,
    neyman_pair_proxy,
    recomputed_average_proxy,
)
from .spectral import (
    SpectralGap,
    TransitionKernel,
    build_transition_kernel,
    crd_eigenvalue_formula,
    crd_eigenvalue_multiplicity,
    dump_kernel_csv,
    jacobi_eigenvalues,
    kernel_spectrum,
    spectral_gap_closed_form,
    spectral_gap_eigen,
)

__all__ = [name for name in dir() if not name.startswith("_")]
