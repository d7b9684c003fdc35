"""
Polyred - Subspace Arithmetic
Tolerance-controlled linear subspaces of R^n: rank, kernel, intersection,
sum, complements and equality. Every geometric check is built on top of it.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from internal.errors.errors import DimensionError, InputError, PreconditionError

logger = logging.getLogger(__name__)

ORTHONORMALITY_TOL = 1e-12


@dataclass(frozen=True)
class Tolerance:
    """Rank and equality thresholds."""
    rank_rel: float = 1e-9
    eq_abs: float = 1e-9

    def __post_init__(self):
        if not (self.rank_rel > 0 and self.eq_abs > 0):
            raise InputError(f"Tolerances must be positive, got {self}")


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace of R^ambient_dim given by an orthonormal basis (ambient_dim x r)."""
    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2:
            basis = basis.reshape(self.ambient_dim, -1)
        if basis.shape[0] != self.ambient_dim:
            raise DimensionError(f"Basis has {basis.shape[0]} rows, expected {self.ambient_dim}")
        if basis.shape[1] > self.ambient_dim:
            raise DimensionError(f"Basis has {basis.shape[1]} columns in R^{self.ambient_dim}")
        gram = basis.T @ basis
        if basis.shape[1] and np.max(np.abs(gram - np.eye(basis.shape[1]))) > ORTHONORMALITY_TOL * 10:
            raise InputError("Subspace basis is not orthonormal")
        basis.setflags(write=False)
        object.__setattr__(self, 'basis', basis)

    @property
    def r(self) -> int:
        return self.basis.shape[1]

    @property
    def dim(self) -> int:
        return self.r

    def project(self, vectors: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.T @ vectors)

    def __repr__(self) -> str:
        return f"Subspace(ambient_dim={self.ambient_dim}, r={self.r})"


def zero(n: int) -> Subspace:
    return Subspace(n, np.zeros((n, 0)))


def full(n: int) -> Subspace:
    return Subspace(n, np.eye(n))


def _as_matrix(columns) -> np.ndarray:
    a = np.asarray(columns, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise InputError(f"Expected a matrix, got array of shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("Matrix has non-finite entries")
    return a


def _check_ambient(U: Subspace, V: Subspace) -> None:
    if U.ambient_dim != V.ambient_dim:
        raise DimensionError(f"Ambient mismatch: {U.ambient_dim} vs {V.ambient_dim}")


def orthonormal_basis(columns, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Column span, with singular values below rank_rel * s_max treated as zero."""
    a = _as_matrix(columns)
    n = a.shape[0]
    if n < 1:
        raise InputError("Ambient dimension must be at least 1")
    if a.shape[1] == 0 or not np.any(a):
        return zero(n)
    u, s, _ = linalg.svd(a, full_matrices=False)
    r = int(np.sum(s > tol.rank_rel * s[0]))
    return Subspace(n, u[:, :r])


def kernel(matrix, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Null space {v : A v = 0}."""
    a = _as_matrix(matrix)
    n = a.shape[1]
    if a.shape[0] == 0 or not np.any(a):
        return full(n)
    return Subspace(n, linalg.null_space(a, rcond=tol.rank_rel))


def intersect(U: Subspace, V: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """U ∩ V, from the kernel of (a, b) -> U a - V b."""
    _check_ambient(U, V)
    if U.r == 0 or V.r == 0:
        return zero(U.ambient_dim)
    k = kernel(np.hstack([U.basis, -V.basis]), tol)
    if k.r == 0:
        return zero(U.ambient_dim)
    return orthonormal_basis(U.basis @ k.basis[:U.r, :], tol)


def subspace_sum(U: Subspace, V: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """U + V, the span of both bases."""
    _check_ambient(U, V)
    return orthonormal_basis(np.hstack([U.basis, V.basis]), tol)


def span_of(*spaces: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Sum of any number of subspaces."""
    if not spaces:
        raise InputError("span_of needs at least one subspace")
    result = spaces[0]
    for space in spaces[1:]:
        result = subspace_sum(result, space, tol)
    return result


def intersect_all(*spaces: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    if not spaces:
        raise InputError("intersect_all needs at least one subspace")
    result = spaces[0]
    for space in spaces[1:]:
        result = intersect(result, space, tol)
    return result


def outside_residual(U: Subspace, vectors) -> float:
    """Spectral norm of the component of `vectors` orthogonal to U."""
    v = _as_matrix(vectors)
    if v.shape[0] != U.ambient_dim:
        raise DimensionError(f"Vectors live in R^{v.shape[0]}, subspace in R^{U.ambient_dim}")
    if v.shape[1] == 0:
        return 0.0
    rest = v - U.project(v)
    return float(np.linalg.norm(rest, 2))


def contains(U: Subspace, V: Subspace, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True when V ⊆ U within eq_abs."""
    _check_ambient(U, V)
    return outside_residual(U, V.basis) < tol.eq_abs


def largest_angle(U: Subspace, V: Subspace) -> float:
    """Largest principal angle; pi/2 when exactly one side is the zero subspace."""
    _check_ambient(U, V)
    if U.r == 0 and V.r == 0:
        return 0.0
    if U.r == 0 or V.r == 0:
        return float(np.pi / 2)
    return float(np.max(linalg.subspace_angles(U.basis, V.basis)))


def subspace_equal(U: Subspace, V: Subspace, tol: Tolerance = DEFAULT_TOL) -> bool:
    _check_ambient(U, V)
    if U.r != V.r:
        return False
    return largest_angle(U, V) < tol.eq_abs


def complement_in(W: Subspace, U: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Orthogonal complement of W inside U (requires W ⊆ U)."""
    _check_ambient(W, U)
    if not contains(U, W, tol):
        raise PreconditionError(
            f"complement_in: W (dim {W.r}) is not contained in U (dim {U.r}), "
            f"residual {outside_residual(U, W.basis):.3e}"
        )
    target = U.r - W.r
    if target <= 0:
        return zero(U.ambient_dim)
    projected = U.basis - W.project(U.basis)
    u, _, _ = linalg.svd(projected, full_matrices=False)
    return Subspace(U.ambient_dim, u[:, :target])


def image(matrix, U: Subspace, tol: Tolerance = DEFAULT_TOL, ambient_dim: Optional[int] = None) -> Subspace:
    """Image of U under a linear map given by `matrix`."""
    a = _as_matrix(matrix)
    if a.shape[1] != U.ambient_dim:
        raise DimensionError(f"Map domain R^{a.shape[1]} does not match R^{U.ambient_dim}")
    n = ambient_dim if ambient_dim is not None else a.shape[0]
    if U.r == 0 or n == 0:
        return zero(n)
    return orthonormal_basis(a @ U.basis, tol)
