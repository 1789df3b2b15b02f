"""Exception hierarchy."""


class StableError(Exception):
    """Base class for errors raised by this package."""


class QuadratureError(StableError):
    """The density quadrature cannot reach its accuracy target."""


class BracketError(StableError):
    """A quantile root could not be bracketed."""


class WindowTooSmallError(StableError, ValueError):
    """A quantile window holds fewer than two order statistics."""


class ZeroDenominatorError(StableError, ZeroDivisionError):
    """A ratio statistic has a vanishing central dispersion."""


class NonMonotoneTableError(StableError):
    """A tabulated statistic is not strictly monotone in alpha."""


class EstimationError(StableError):
    """An estimator could not produce a value on the given data."""


class DataError(StableError, ValueError):
    """Input data could not be parsed or fails a precondition."""


class DegenerateSampleError(EstimationError):
    """The sample has no spread where the estimator needs it."""


class NonFiniteLikelihoodError(EstimationError):
    """The log-likelihood is not finite anywhere in the search bracket."""
