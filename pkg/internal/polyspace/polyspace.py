"""
Polyred - Polysymplectic Vector Spaces
Families of skew forms on one tangent space: nondegeneracy, k-orthogonal
complements, the musical map flat and induced quotient forms.
"""
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from internal.errors.errors import DimensionError, InputError
from internal.subspace.subspace import (
    DEFAULT_TOL,
    Subspace,
    Tolerance,
    complement_in,
    full,
    intersect_all,
    kernel,
)

logger = logging.getLogger(__name__)

SKEW_TOL = 1e-12
WELL_CONDITIONED = 1e2


@dataclass(frozen=True, eq=False)
class FormFamily:
    """k skew bilinear forms on R^n, with omega^A(u, v) = u^T Omega^A v."""
    omegas: Tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = tuple(np.atleast_2d(np.asarray(om, dtype=float)) for om in self.omegas)
        if not mats:
            raise InputError("FormFamily needs at least one form")
        n = mats[0].shape[0]
        for A, om in enumerate(mats):
            if om.shape != (n, n):
                raise DimensionError(f"Form {A + 1} has shape {om.shape}, expected {(n, n)}")
            if not np.all(np.isfinite(om)):
                raise InputError(f"Form {A + 1} has non-finite entries")
            scale = max(1.0, float(np.max(np.abs(om)))) if om.size else 1.0
            if om.size and np.max(np.abs(om + om.T)) > SKEW_TOL * scale:
                raise InputError(f"Form {A + 1} is not skew")
            om.setflags(write=False)
        object.__setattr__(self, 'omegas', mats)

    @property
    def n(self) -> int:
        return self.omegas[0].shape[0]

    @property
    def k(self) -> int:
        return len(self.omegas)

    def evaluate(self, A: int, u: np.ndarray, v: np.ndarray) -> float:
        """omega^A(u, v) with A counted from 1."""
        return float(np.asarray(u) @ self.omegas[A - 1] @ np.asarray(v))

    def transform(self, P: np.ndarray) -> 'FormFamily':
        """Pullback by the linear map P: Omega^A -> P^T Omega^A P."""
        pulled = (P.T @ om @ P for om in self.omegas)
        return FormFamily(tuple(0.5 * (M - M.T) for M in pulled))


class PolySymplecticSpace:
    """A FormFamily whose kernels intersect trivially."""

    def __init__(self, forms: FormFamily, tol: Tolerance = DEFAULT_TOL):
        if not verify_polysymplectic(forms, tol):
            raise InputError(f"Form family (n={forms.n}, k={forms.k}) is degenerate")
        self.forms = forms
        self.tol = tol

    @property
    def n(self) -> int:
        return self.forms.n

    @property
    def k(self) -> int:
        return self.forms.k


def canonical_forms(m: int, k: int) -> FormFamily:
    """omega^A = dq^i ^ dp^A_i on R^{m(k+1)} with coordinates (q, p^1, ..., p^k)."""
    n = m * (k + 1)
    omegas = []
    for A in range(1, k + 1):
        om = np.zeros((n, n))
        block = slice(A * m, (A + 1) * m)
        om[0:m, block] = np.eye(m)
        om[block, 0:m] = -np.eye(m)
        omegas.append(om)
    return FormFamily(tuple(omegas))


def common_kernel(forms: FormFamily, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """∩_A ker Omega^A as an intersection of the individual kernels."""
    return intersect_all(*(kernel(om, tol) for om in forms.omegas), tol=tol)


def verify_polysymplectic(forms: FormFamily, tol: Tolerance = DEFAULT_TOL) -> bool:
    if forms.n == 0:
        return True
    return common_kernel(forms, tol).r == 0


def _check_dim(W: Subspace, forms: FormFamily) -> None:
    if W.ambient_dim != forms.n:
        raise DimensionError(f"Subspace in R^{W.ambient_dim}, forms on R^{forms.n}")


def k_orthogonal(W: Subspace, forms: FormFamily, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """W^{⊥,k}: kernel of the stacked constraints w^T Omega^A for every basis w and every A."""
    _check_dim(W, forms)
    if W.r == 0:
        return full(forms.n)
    constraints = np.vstack([W.basis.T @ om for om in forms.omegas])
    return kernel(constraints, tol)


def flat_matrix(forms: FormFamily) -> np.ndarray:
    """Matrix of (v_1, ..., v_k) -> sum_A i_{v_A} omega^A acting on the stacked vector."""
    return np.hstack([om.T for om in forms.omegas])


def flat(vectors: Sequence[np.ndarray], forms: FormFamily) -> np.ndarray:
    """Covector w -> sum_A v_A^T Omega^A w, returned as a vector of components."""
    if len(vectors) != forms.k:
        raise DimensionError(f"Expected {forms.k} vectors, got {len(vectors)}")
    stacked = []
    for v in vectors:
        v = np.asarray(v, dtype=float)
        if v.shape != (forms.n,):
            raise DimensionError(f"Vector of shape {v.shape}, expected ({forms.n},)")
        stacked.append(v)
    return flat_matrix(forms) @ np.concatenate(stacked)


def sharp_injectivity(forms: FormFamily, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True when v -> (i_v omega^1, ..., i_v omega^k) has zero kernel."""
    if forms.n == 0:
        return True
    return kernel(np.vstack(forms.omegas), tol).r == 0


def restrict_form(omega: np.ndarray, W: Subspace) -> np.ndarray:
    """B^T Omega B for the basis B of W."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (W.ambient_dim, W.ambient_dim):
        raise DimensionError(f"Form of shape {omega.shape} on subspace of R^{W.ambient_dim}")
    restricted = W.basis.T @ omega @ W.basis
    return 0.5 * (restricted - restricted.T)


def restrict_family(forms: FormFamily, W: Subspace) -> FormFamily:
    _check_dim(W, forms)
    return FormFamily(tuple(restrict_form(om, W) for om in forms.omegas))


def quotient_form(omega: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> Tuple[Subspace, Subspace, np.ndarray]:
    """
    Induced nondegenerate form on R^n / ker Omega.

    Returns (K, C, Omega_tilde): K = ker Omega, C its orthogonal complement
    (the chosen representatives of the classes) and Omega_tilde the form in
    the basis of C. The class of v has coordinates C.basis^T v.
    """
    omega = np.asarray(omega, dtype=float)
    n = omega.shape[0]
    K = kernel(omega, tol)
    C = complement_in(K, full(n), tol)
    return K, C, restrict_form(omega, C)


def is_nondegenerate(omega: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> bool:
    omega = np.asarray(omega, dtype=float)
    if omega.size == 0:
        return True
    return kernel(omega, tol).r == 0


def random_polysymplectic(rng: np.random.Generator, m: int = 1, k: int = 2) -> Tuple[FormFamily, np.ndarray]:
    """Canonical covelocity family pulled back by a random well-conditioned linear map."""
    n = m * (k + 1)
    while True:
        P = rng.standard_normal((n, n))
        if np.linalg.cond(P) < WELL_CONDITIONED:
            break
    return canonical_forms(m, k).transform(P), P

