"""Exception types shared across the package."""


class SqueezesimError(Exception):
    """Base class for all library errors."""


class InvalidInputError(SqueezesimError, ValueError):
    """An argument violates a documented precondition (shape, norm, sign...)."""


class DegenerateCovarianceError(SqueezesimError):
    """A covariance entry that must be positive is zero or negative."""


class DivergenceError(SqueezesimError):
    """An integration produced a non-finite value.

    Carries the time of failure in ``time``.
    """

    def __init__(self, message, time):
        super().__init__(message)
        self.time = time


class OpticallyThickError(SqueezesimError):
    """Single-pass photon absorption is not small; use the sliced thick-gas
    scenario instead of the single-segment rates."""


class NoMinimumError(SqueezesimError):
    """The variance curve has no interior minimum for these parameters."""


class ConfigError(SqueezesimError):
    """A run configuration is inconsistent or outside the validity range."""
