"""Exception types shared across the package."""

from __future__ import annotations


class BlochampError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParams(BlochampError, ValueError):
    """A model parameter or parameter combination is outside its validity range."""


class IntegrationError(BlochampError):
    """Base class for integration failures, carrying the state at failure."""

    def __init__(self, message: str, t: float | None = None,
                 tau: float | None = None, r=None):
        super().__init__(message)
        self.t = t
        self.tau = tau
        self.r = None if r is None else tuple(float(v) for v in r)


class ConeViolation(IntegrationError):
    """A trajectory left the positive-semidefinite cone beyond tolerance.

    Signals either a non-positive map or an integrator failure.
    """


class ApexReached(IntegrationError):
    """The trace collapsed below the apex cutoff during integration."""


class StepFailure(IntegrationError):
    """The adaptive step controller could not meet its error tolerance."""


class TargetUnreachable(BlochampError):
    """A gate plan cannot reach the requested target within its time budget."""
