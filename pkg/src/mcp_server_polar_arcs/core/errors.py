"""
Error types for the polar arcs toolkit.

Usage errors signal bad input (exit code 2 on the command line); numerical
errors signal that a computation did not converge or produced an
inconsistent result (exit code 3).
"""

from typing import Any, Dict, Optional


class PolarArcError(Exception):
    """Base class for every error raised by this package."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = dict(details or {})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class UsageError(PolarArcError):
    """Input that can never succeed, whatever the tolerances."""


class NumericalError(PolarArcError):
    """A numerical procedure failed or produced inconsistent output."""


# Usage errors
class InvalidIntervalError(UsageError):
    pass


class UnknownNameError(UsageError):
    pass


class NonUnimodularError(UsageError):
    pass


class MapSpecError(UsageError):
    pass


class SupportError(UsageError):
    pass


class ConfigError(UsageError):
    pass


class PreconditionError(UsageError):
    pass


# Numerical errors
class TracingError(NumericalError):
    pass


class TracingInconsistencyError(NumericalError):
    pass


class NotInClassGError(NumericalError):
    pass


class CanonicalFormError(NumericalError):
    pass


class CompositionError(NumericalError):
    pass


class RealizationError(NumericalError):
    pass


class LocalizationError(NumericalError):
    pass
