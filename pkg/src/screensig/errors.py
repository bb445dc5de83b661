"""Exception hierarchy shared by all modules.

The CLI maps :class:`ConfigurationError` (and subclasses) to exit code 2
and :class:`NumericalError` (and subclasses) to exit code 3.
"""


class ScreenSigError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ScreenSigError, ValueError):
    """Invalid input, inconsistent parameters or an unusable mesh."""


class ParameterError(ConfigurationError):
    """A domain or physical parameter violates its invariants."""


class ResolutionError(ConfigurationError):
    """The requested mesh size cannot resolve the domain."""


class ParseError(ConfigurationError):
    """A text artifact could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(ConfigurationError):
    """A function was evaluated outside its domain of definition."""


class NumericalError(ScreenSigError, ArithmeticError):
    """A linear algebra or series computation failed."""


class AdmissibilityError(NumericalError):
    """k^2 is (close to) a mixed Dirichlet-Neumann eigenvalue of D."""


class DataError(NumericalError):
    """Non-finite or otherwise corrupt numerical data."""
