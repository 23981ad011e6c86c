"""Exception hierarchy. Every error names the invariant it guards."""

from __future__ import annotations


class RobustMertonError(ValueError):
    """Base class for all package errors."""


class NonSPDCovariance(RobustMertonError):
    pass


class InconsistentBox(RobustMertonError):
    pass


class CapBelowSpectrum(RobustMertonError):
    pass


class DeltaTooLarge(RobustMertonError):
    pass


class BadPreferences(RobustMertonError):
    pass


class BadMarket(RobustMertonError):
    pass


class UnsupportedVariant(RobustMertonError):
    pass


class ZeroPortfolio(RobustMertonError):
    pass


class IllPosed(RobustMertonError):
    """Raised where a finite value function is required but gamma_eps <= 0."""

    def __init__(self, message: str, gamma_eps: float | None = None, witness=None):
        super().__init__(message)
        self.gamma_eps = gamma_eps
        self.witness = witness


class NoConvergence(RobustMertonError):
    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class InvalidScheme(RobustMertonError):
    pass


class HorizonMismatch(RobustMertonError):
    pass


class MalformedCSV(RobustMertonError):
    pass


class DegenerateSample(RobustMertonError):
    pass


class ConfigError(RobustMertonError):
    pass


class WriteFailure(RobustMertonError):
    pass
