"""
Exception hierarchy for holevo_rgd
"""

from typing import Optional


class HolevoError(Exception):
    """Base class for every error raised by this package"""


class DimensionMismatchError(HolevoError, ValueError):
    """Operand shapes do not agree"""


class NotPositiveSemidefiniteError(HolevoError, ValueError):
    """A matrix has an eigenvalue below the round-off clamp"""

    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(f"matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")


class InvalidStateError(HolevoError, ValueError):
    """Input is not a density matrix or a unit vector"""


class SupportViolationError(HolevoError, ValueError):
    """ρ has weight on the kernel of σ; the channel was most likely not smoothed"""


class EigensolverError(HolevoError):
    """The Hermitian eigensolver failed to converge"""

    def __init__(self, message: str, residual_norm: Optional[float] = None):
        self.residual_norm = residual_norm
        if residual_norm is not None:
            message = f"{message} (residual norm {residual_norm:.3e})"
        super().__init__(message)


class ChannelValidationError(HolevoError, ValueError):
    """Kraus set is not trace preserving or a cq output is not a density matrix"""


class DimensionOverflowError(HolevoError, ValueError):
    """Problem dimension exceeds a configured cap"""


class NotDescentDirectionError(HolevoError, ValueError):
    """Line search was called with a direction that does not decrease the cost"""


class LineSearchExhausted(HolevoError):
    """Armijo backtracking ran out of contractions"""


class SolverAbortError(HolevoError):
    """Every restart of a solve failed"""


class SpecError(HolevoError, ValueError):
    """Malformed channel specification"""
