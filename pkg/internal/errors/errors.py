"""
Polyred - Errors
Exception hierarchy shared by every module.
"""
from typing import Optional


class PolyredError(Exception):
    """Base class for all polyred errors."""


class InputError(PolyredError, ValueError):
    """Invalid numerical input (non-finite entries, bad shapes, bad parameters)."""


class DimensionError(InputError):
    """Ambient dimensions of the operands do not match."""


class InvalidGroupElementError(InputError):
    """Matrix is not a rotation."""


class PreconditionError(PolyredError):
    """A documented precondition of an operation does not hold."""


class InconsistentSnapshotError(PolyredError):
    """Pointwise G-space data violates the momentum or isotropy invariants."""


class UnsupportedActionError(PolyredError):
    """Base action lacks the derivative data needed for the cotangent lift."""


class MissingMetricError(PolyredError):
    """An inner product on the Lie algebra is required."""


class NoSolutionError(PolyredError):
    """The Hamiltonian polysymplectic equation has no solution."""


class LevelSetError(PolyredError):
    """Initial state is not on the requested momentum level set."""


class DivergenceError(PolyredError):
    """Integration produced a non-finite state."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step
