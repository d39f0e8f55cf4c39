"""Exception types raised across the package."""
from __future__ import annotations


class SQKDError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SQKDError, ValueError):
    pass


class DegenerateState(SQKDError, ArithmeticError):
    """A sampled measurement outcome had (numerically) zero weight."""


class InvalidDistribution(SQKDError, ValueError):
    pass


class InsufficientRounds(SQKDError):
    """Too few Z_p x Z_s SIFT rounds to fill the check subset and the key.

    Raised when Bob's random choices leave fewer rounds than the check
    subset plus ``n/2`` key photons need. Increase ``delta`` to pad the batch.
    """

    def __init__(self, available: int, required: int, delta: float | None = None):
        self.available = available
        self.required = required
        self.delta = delta
        hint = "increase delta" if delta is None else f"increase delta (currently {delta})"
        super().__init__(f"only {available} Zp*Zs SIFT rounds, {required} required; {hint}")


class AttackFileError(SQKDError, ValueError):
    pass
