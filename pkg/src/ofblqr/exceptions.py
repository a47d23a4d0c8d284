"""Exception hierarchy for ofblqr.

Every error raised by the library derives from :class:`OfbLqrError` so
callers can catch library failures with a single except clause.
"""


class OfbLqrError(Exception):
    """Base class for all ofblqr errors."""


class AsymmetricInputError(OfbLqrError):
    """A matrix expected to be symmetric is not (beyond tolerance)."""


class RankDeficiencyError(OfbLqrError):
    """A least-squares matrix has numerical rank below its column count.

    Attributes
    ----------
    rank : int
        The numerical rank detected.
    ncols : int
        The number of columns (the required rank).
    """

    def __init__(self, message, rank=None, ncols=None):
        super().__init__(message)
        self.rank = rank
        self.ncols = ncols


class DivergenceError(OfbLqrError):
    """A simulated or iterated quantity exceeded the overflow guard.

    Attributes
    ----------
    step : int or None
        First offending time/iteration index, when known.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ObservabilityError(OfbLqrError):
    """(A, C) is not observable where observability is required."""


class StabilizabilityError(OfbLqrError):
    """(A, B) is not stabilizable."""


class InstabilityError(OfbLqrError):
    """A matrix required to be Schur (spectral radius < 1) is not."""


class NonConvergenceError(OfbLqrError):
    """An iteration cap was exceeded before the stopping test fired.

    Attributes
    ----------
    trace : object or None
        Partial iteration trace accumulated before the failure.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InadmissiblePolicyError(OfbLqrError):
    """A policy-iteration start (or iterate) is not stabilizing."""


class InsufficientExcitationError(OfbLqrError):
    """Collected data does not satisfy the required rank condition.

    Attributes
    ----------
    rank_profile : list of int or None
        Numerical rank of the growing regressor stack at each check.
    """

    def __init__(self, message, rank_profile=None):
        super().__init__(message)
        self.rank_profile = rank_profile


class BadInitializerError(OfbLqrError):
    """An initial vector makes a required matrix singular."""


class WindowTooShortError(OfbLqrError):
    """Reconstruction window shorter than the observability index."""


class CertificationTimeoutError(OfbLqrError):
    """The switched iteration never certified stability within its cap."""


class ConfigError(OfbLqrError):
    """Experiment configuration is invalid; message names the field."""
