"""Exception hierarchy shared by all modules."""


class RisSecrecyError(Exception):
    """Base class for package errors."""


class DomainError(RisSecrecyError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericError(RisSecrecyError, ArithmeticError):
    """A factorization or evaluation failed numerically."""


class FitError(RisSecrecyError, RuntimeError):
    """Fitting the amplitude law to a circuit sweep failed."""


class ZeroGradientError(RisSecrecyError, ArithmeticError):
    """A step size cannot be initialised from an all-zero gradient."""


class ConfigError(RisSecrecyError, ValueError):
    """An experiment configuration is invalid."""
