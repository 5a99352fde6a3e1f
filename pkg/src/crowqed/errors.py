"""Exception types raised by :mod:`crowqed`."""


class CrowqedError(Exception):
    """Base class for all library errors."""


class ValidationError(CrowqedError, ValueError):
    """Invalid parameters, profiles or configuration."""


class ExceptionalPointError(CrowqedError, ArithmeticError):
    """The two polariton branches coalesce; branch amplitudes are undefined."""


class SingularSystemError(CrowqedError, ArithmeticError):
    """A Green-function linear system has no unique solution at this frequency."""


class IntegrationError(CrowqedError, RuntimeError):
    """Two independent time integrations of the same mode disagree."""


class RegimeWarning(UserWarning):
    """An approximate formula is used outside the regime where it holds."""
