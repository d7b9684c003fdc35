"""
Polyred - Lie Algebra Machinery
Brackets from structure constants, ad*, Coad and Coad^k, isotropy
subalgebras, and the SO(3)/so(3) identifications with the exponential map.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg
from scipy.spatial.transform import Rotation

from internal.errors.errors import (
    DimensionError,
    InputError,
    InvalidGroupElementError,
    MissingMetricError,
)
from internal.subspace.subspace import DEFAULT_TOL, Subspace, Tolerance, kernel

logger = logging.getLogger(__name__)

STRUCTURE_TOL = 1e-12
ROTATION_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LieAlgebraData:
    """Lie algebra with [e_a, e_b] = sum_e c[a, b, e] e_e and an optional inner product."""
    c: np.ndarray
    metric: Optional[np.ndarray] = None
    name: str = "g"

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise DimensionError(f"Structure constants must be d x d x d, got {c.shape}")
        if np.max(np.abs(c + c.transpose(1, 0, 2)), initial=0.0) > STRUCTURE_TOL:
            raise InputError("Structure constants are not antisymmetric")
        # [e_a, [e_b, e_c]] + cyclic, expanded in the basis
        jacobi = (np.einsum('bce,aef->abcf', c, c)
                  + np.einsum('cae,bef->abcf', c, c)
                  + np.einsum('abe,cef->abcf', c, c))
        if np.max(np.abs(jacobi), initial=0.0) > STRUCTURE_TOL:
            raise InputError("Structure constants violate the Jacobi identity")
        c.setflags(write=False)
        object.__setattr__(self, 'c', c)
        if self.metric is not None:
            metric = np.asarray(self.metric, dtype=float)
            if metric.shape != (c.shape[0], c.shape[0]):
                raise DimensionError(f"Metric of shape {metric.shape} for d={c.shape[0]}")
            if np.max(np.abs(metric - metric.T)) > STRUCTURE_TOL or np.min(linalg.eigvalsh(metric)) <= 0:
                raise InputError("Metric must be symmetric positive definite")
            metric.setflags(write=False)
            object.__setattr__(self, 'metric', metric)

    @property
    def d(self) -> int:
        return self.c.shape[0]


def so3(metric=None) -> LieAlgebraData:
    """so(3) ≅ (R^3, x): c[a, b, e] is the Levi-Civita symbol."""
    c = np.zeros((3, 3, 3))
    for a, b, e in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[a, b, e] = 1.0
        c[b, a, e] = -1.0
    return LieAlgebraData(c, metric, "so3")


def abelian(d: int, metric=None) -> LieAlgebraData:
    return LieAlgebraData(np.zeros((d, d, d)), metric, f"R{d}")


def _vector(L: LieAlgebraData, x, what: str = "vector") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (L.d,):
        raise DimensionError(f"{what} of shape {x.shape}, expected ({L.d},)")
    return x


def bracket(L: LieAlgebraData, x, y) -> np.ndarray:
    return np.einsum('a,b,abe->e', _vector(L, x), _vector(L, y), L.c)


def ad_matrix(L: LieAlgebraData, x) -> np.ndarray:
    """Matrix of y -> [x, y]."""
    return np.einsum('a,abe->eb', _vector(L, x), L.c)


def bracket_form(L: LieAlgebraData, nu) -> np.ndarray:
    """Matrix B with nu([x, y]) = x^T B y."""
    return np.einsum('abe,e->ab', L.c, _vector(L, nu, "covector"))


def ad_star(L: LieAlgebraData, xi, mu) -> np.ndarray:
    """The covector eta -> mu([xi, eta])."""
    return ad_star_matrix(L, mu) @ _vector(L, xi)


def ad_star_matrix(L: LieAlgebraData, mu) -> np.ndarray:
    """Matrix of xi -> ad*_xi mu."""
    return bracket_form(L, mu).T


def metric_flat(L: LieAlgebraData, xi) -> np.ndarray:
    if L.metric is None:
        raise MissingMetricError(f"Lie algebra {L.name} has no metric")
    return L.metric @ _vector(L, xi)


def metric_sharp(L: LieAlgebraData, mu) -> np.ndarray:
    """Inverse of the metric flat map, g* -> g."""
    if L.metric is None:
        raise MissingMetricError(f"Lie algebra {L.name} has no metric")
    return linalg.solve(L.metric, _vector(L, mu, "covector"), assume_a='pos')


def so3_hat(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise DimensionError(f"so3_hat expects a 3-vector, got shape {x.shape}")
    return np.array([[0.0, -x[2], x[1]],
                     [x[2], 0.0, -x[0]],
                     [-x[1], x[0], 0.0]])


def so3_vee(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != (3, 3):
        raise DimensionError(f"so3_vee expects a 3x3 matrix, got shape {X.shape}")
    return np.array([X[2, 1], X[0, 2], X[1, 0]])


@dataclass(frozen=True, eq=False)
class GroupElementSO3:
    R: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        if R.shape != (3, 3) or not np.all(np.isfinite(R)):
            raise InvalidGroupElementError(f"Not a finite 3x3 matrix: shape {R.shape}")
        if np.max(np.abs(R.T @ R - np.eye(3))) > ROTATION_TOL or abs(np.linalg.det(R) - 1.0) > ROTATION_TOL:
            raise InvalidGroupElementError("Matrix is not in SO(3)")
        R.setflags(write=False)
        object.__setattr__(self, 'R', R)


def exp_so3(x) -> GroupElementSO3:
    """Rodrigues formula; second-order series for small angles."""
    x = np.asarray(x, dtype=float)
    X = so3_hat(x)
    theta2 = float(x @ x)
    if theta2 < 1e-12:
        a = 1.0 - theta2 / 6.0
        b = 0.5 - theta2 / 24.0
    else:
        theta = np.sqrt(theta2)
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    return GroupElementSO3(np.eye(3) + a * X + b * (X @ X))


def random_rotation(rng: np.random.Generator) -> GroupElementSO3:
    return GroupElementSO3(Rotation.random(random_state=rng).as_matrix())


def reorthonormalize(R: np.ndarray) -> np.ndarray:
    """Closest rotation matrix, from the polar decomposition."""
    u, _ = linalg.polar(np.asarray(R, dtype=float))
    return u


class SO3Group:
    """SO(3) acting on so(3)* ≅ R^3 by Coad(A, pi) = A pi."""

    def __init__(self, metric=None):
        self.algebra = so3(metric)

    def identity(self) -> GroupElementSO3:
        return GroupElementSO3(np.eye(3))

    def element(self, g: Union[GroupElementSO3, np.ndarray]) -> GroupElementSO3:
        return g if isinstance(g, GroupElementSO3) else GroupElementSO3(g)

    def compose(self, g: GroupElementSO3, h: GroupElementSO3) -> GroupElementSO3:
        return GroupElementSO3(self.element(g).R @ self.element(h).R)

    def inverse(self, g: GroupElementSO3) -> GroupElementSO3:
        return GroupElementSO3(self.element(g).R.T)

    def exp(self, x) -> GroupElementSO3:
        return exp_so3(x)

    def ad_inverse_matrix(self, g) -> np.ndarray:
        """Matrix of Ad_{g^-1} on so(3)."""
        return self.element(g).R.T

    def coad_matrix(self, g) -> np.ndarray:
        """Matrix of Coad_g = (Ad_{g^-1})^T on so(3)*."""
        return self.element(g).R

    def project(self, g) -> GroupElementSO3:
        return GroupElementSO3(reorthonormalize(self.element(g).R))

    def random(self, rng: np.random.Generator) -> GroupElementSO3:
        return random_rotation(rng)


class AbelianGroup:
    """(R^d, +); Ad and Coad are trivial."""

    def __init__(self, d: int, metric=None):
        self.algebra = abelian(d, metric)
        self.d = d

    def identity(self) -> np.ndarray:
        return np.zeros(self.d)

    def element(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if g.shape != (self.d,) or not np.all(np.isfinite(g)):
            raise InvalidGroupElementError(f"Not an element of R^{self.d}: shape {g.shape}")
        return g

    def compose(self, g, h) -> np.ndarray:
        return self.element(g) + self.element(h)

    def inverse(self, g) -> np.ndarray:
        return -self.element(g)

    def exp(self, x) -> np.ndarray:
        return self.element(x).copy()

    def ad_inverse_matrix(self, g) -> np.ndarray:
        return np.eye(self.d)

    def coad_matrix(self, g) -> np.ndarray:
        return np.eye(self.d)

    def project(self, g) -> np.ndarray:
        return self.element(g)

    def random(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.d)


Group = Union[SO3Group, AbelianGroup]


def coad(group: Group, g, mu) -> np.ndarray:
    """Coad_g mu = mu o Ad_{g^-1}."""
    mu = np.asarray(mu, dtype=float)
    M = group.coad_matrix(g)
    if mu.shape != (M.shape[0],):
        raise DimensionError(f"Covector of shape {mu.shape}, expected ({M.shape[0]},)")
    return M @ mu


def coad_k(group: Group, g, mus) -> np.ndarray:
    """Componentwise Coad on k covectors, returned as a k x d array."""
    mus = np.atleast_2d(np.asarray(mus, dtype=float))
    M = group.coad_matrix(g)
    if mus.shape[1] != M.shape[0]:
        raise DimensionError(f"Covectors of dimension {mus.shape[1]}, expected {M.shape[0]}")
    return mus @ M.T


def isotropy_subalgebra(L: LieAlgebraData, mus: Sequence, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """g_mu = {xi : ad*_xi mu_A = 0 for every A}."""
    mus = np.atleast_2d(np.asarray(mus, dtype=float))
    return kernel(np.vstack([ad_star_matrix(L, mu) for mu in mus]), tol)


def coadjoint_generator(L: LieAlgebraData, xi, nus) -> np.ndarray:
    """Infinitesimal generator of Coad^k at nu: rows -ad*_xi nu_A."""
    nus = np.atleast_2d(np.asarray(nus, dtype=float))
    return np.array([-ad_star(L, xi, nu) for nu in nus])


def coadjoint_generator_matrix(L: LieAlgebraData, nus) -> np.ndarray:
    """Stacked (k d) x d matrix of xi -> (-ad*_xi nu_1, ..., -ad*_xi nu_k)."""
    nus = np.atleast_2d(np.asarray(nus, dtype=float))
    return np.vstack([-ad_star_matrix(L, nu) for nu in nus])
