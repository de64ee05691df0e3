"""Exception types raised across the package."""


class LogVolError(Exception):
    """Base class for all package errors."""


class DomainError(LogVolError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedOrderError(LogVolError, ValueError):
    pass


class CombinatorialLimitError(LogVolError, ValueError):
    pass


class RankDeficiencyError(LogVolError, ArithmeticError):
    """The Gram matrix is numerically singular, so the log-volume is -inf."""


class QuadratureError(LogVolError, ArithmeticError):
    pass


class SamplerError(LogVolError, RuntimeError):
    pass


class AdmissibilityError(LogVolError, ValueError):
    """A custom radial law failed the admissibility diagnostics."""


class InstabilityError(LogVolError, ArithmeticError):
    pass


class InversionError(LogVolError, ArithmeticError):
    pass


class DegenerateVarianceError(LogVolError, ArithmeticError):
    pass


class ConfigError(LogVolError, ValueError):
    pass
