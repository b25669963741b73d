"""Exception hierarchy shared across the package."""


class NeymanJackknifeError(Exception):
    """Base class for all package-specific errors."""


class SupportSizeError(NeymanJackknifeError):
    """Exact enumeration was requested for a state space above the cap."""


class DegenerateRealizationError(NeymanJackknifeError):
    """A realization left an estimator or proxy undefined (e.g. empty arm)."""


class AllDeletedError(DegenerateRealizationError):
    """A deletion set covered every outcome unit."""


class NoClosedFormError(NeymanJackknifeError):
    """No closed-form spectral gap is known for this design/rule pair."""


class NonReversibleKernelError(NeymanJackknifeError):
    """Detailed balance fails beyond tolerance for an assembled kernel."""


class MonotonicityError(NeymanJackknifeError):
    """A bound that must be monotone in the block size was not."""


class IdentityCheckError(NeymanJackknifeError):
    """Two computation paths that must agree numerically did not."""


class ConfigError(NeymanJackknifeError):
    """Invalid or unknown key in a configuration file."""
