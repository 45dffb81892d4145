"""Exception types raised across the library."""


class BisaddleError(Exception):
    """Base class for all library-specific errors."""


class DimensionMismatch(BisaddleError, ValueError):
    """Operands have incompatible shapes."""


class NonFinite(BisaddleError, ValueError):
    """An input contains NaN or infinite entries."""


class NotSPD(BisaddleError, ValueError):
    """A matrix expected to be symmetric positive definite is not."""


class BadSpectrum(BisaddleError, ValueError):
    """Requested eigenvalue range is empty or unrealizable."""


class Unbalanced(BisaddleError, ValueError):
    """Solver requires equal curvature certificates on both sides."""


class NotRescaled(BisaddleError, ValueError):
    """Caller must equalize the smoothness constants first."""


class BadOrdering(BisaddleError, ValueError):
    """Strong-convexity constants violate the ordering the wrapper assumes."""


class BadC0(BisaddleError, ValueError):
    """Initial-distance bound is missing or nonpositive."""


class SingularSystem(BisaddleError, ValueError):
    """Stationarity system could not be solved; certificates are corrupt."""


class MissingField(BisaddleError, KeyError):
    """A trace lacks a series the requested monitor needs."""


class ConfigError(BisaddleError, ValueError):
    """Experiment configuration failed validation."""
