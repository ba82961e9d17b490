"""Exception classes shared across the package.

The CLI maps these onto distinct exit codes: configuration problems -> 2,
budget overruns -> 3, eigensolver failures -> 4, theorem-hypothesis
failures (sign conditions, degeneracies) -> 5.
"""


class SimdynError(Exception):
    """Base class for all package errors."""


class ConfigError(SimdynError):
    """Malformed or inconsistent experiment configuration."""

    exit_code = 2


class BudgetError(SimdynError):
    exit_code = 3


class CapExceeded(BudgetError):
    """Word enumeration would exceed the configured cap."""


class BudgetExceeded(BudgetError):
    """Point/quadrature enumeration would exceed the configured budget."""


class Overflow(BudgetError):
    """Integer slope product too large for exact arithmetic fast paths."""


class ConvergenceError(SimdynError):
    exit_code = 4


class NoConvergence(ConvergenceError):
    """Power iteration failed to reach the requested residual."""


class NonPositiveEigenfunction(ConvergenceError):
    """Computed leading eigenfunction is not strictly positive."""


class EigenfunctionNotPositive(NonPositiveEigenfunction):
    """Alias used by the normalization path."""


class HypothesisFailure(SimdynError):
    exit_code = 5


class NoSignChange(HypothesisFailure):
    """Root bracket for kappa does not change sign."""


class DegenerateDenominator(HypothesisFailure):
    """Approximability ratio has a vanishing denominator."""


class NotMeanZero(HypothesisFailure):
    """Observable must integrate to zero against Lebesgue."""


class DomainError(SimdynError, ValueError):
    """Argument outside [0, 1] or otherwise out of range."""

    exit_code = 2


class SymbolOutOfRange(DomainError):
    pass


class EmptyWord(DomainError):
    pass


class WordTooShort(DomainError):
    pass


class LengthMismatch(DomainError):
    pass


class DepthZero(DomainError):
    """Skew operator needs depth >= 1; use the collective operator instead."""


class TooFewPoints(DomainError):
    """Not enough usable data points for a fit."""


class AgreementError(SimdynError):
    """Two independent computation routes disagree beyond tolerance."""

    exit_code = 4
