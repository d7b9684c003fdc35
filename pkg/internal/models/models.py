"""
Polyred - Models
Concrete Hamiltonian polysymplectic G-spaces: covelocity bundles with lifted
actions, products of T*R^2 (diagonal counterexample and product group), the
left-trivialized group model G x (g*)^k, k-coadjoint orbits and the SO(3)
orbit classification.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from internal.errors.errors import DimensionError, InputError, UnsupportedActionError
from internal.liealg.liealg import (
    Group,
    LieAlgebraData,
    abelian,
    ad_star_matrix,
    bracket_form,
    coad_k,
    coadjoint_generator_matrix,
    isotropy_subalgebra,
    so3,
    so3_hat,
    so3_vee,
)
from internal.polyspace.polyspace import FormFamily, canonical_forms
from internal.reduction.reduction import GSpaceSnapshot
from internal.subspace.subspace import DEFAULT_TOL, Subspace, Tolerance, kernel, orthonormal_basis

logger = logging.getLogger(__name__)

DEPENDENCE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CovelocityPoint:
    """(q, p^1, ..., p^k) in the bundle of k^1-covelocities over R^m."""
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(-1)
        p = np.atleast_2d(np.asarray(self.p, dtype=float))
        if p.shape[1] != q.shape[0]:
            raise DimensionError(f"Momenta of dimension {p.shape[1]} over base R^{q.shape[0]}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise InputError("CovelocityPoint has non-finite entries")
        object.__setattr__(self, 'q', q)
        object.__setattr__(self, 'p', p)

    @property
    def m(self) -> int:
        return self.q.shape[0]

    @property
    def k(self) -> int:
        return self.p.shape[0]


@dataclass(frozen=True, eq=False)
class GroupModelPoint:
    """(g, nu_1, ..., nu_k) in G x (g*)^k, left trivialized."""
    g: object
    nus: np.ndarray

    def __post_init__(self):
        nus = np.atleast_2d(np.asarray(self.nus, dtype=float))
        if not np.all(np.isfinite(nus)):
            raise InputError("GroupModelPoint has non-finite momenta")
        object.__setattr__(self, 'nus', nus)

    @property
    def k(self) -> int:
        return self.nus.shape[0]


@dataclass(frozen=True, eq=False)
class OrbitPoint:
    """(nu_1, ..., nu_k) on a k-coadjoint orbit."""
    nus: np.ndarray

    def __post_init__(self):
        nus = np.atleast_2d(np.asarray(self.nus, dtype=float))
        if not np.all(np.isfinite(nus)):
            raise InputError("OrbitPoint has non-finite entries")
        object.__setattr__(self, 'nus', nus)

    @property
    def k(self) -> int:
        return self.nus.shape[0]

    def gram(self) -> np.ndarray:
        return self.nus @ self.nus.T


# ==================
# Covelocity bundles
# ==================

class BaseAction:
    """
    Infinitesimal action of a Lie algebra on R^m.

    vector_field(q) returns the m x d matrix of generators xi_Q(q) and
    derivative(q) the d x m x m array of their q-derivatives.
    """

    def __init__(self, algebra: LieAlgebraData, m: int,
                 vector_field: Callable[[np.ndarray], np.ndarray],
                 derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 name: str = "action"):
        self.algebra = algebra
        self.m = m
        self.vector_field = vector_field
        self.derivative = derivative
        self.name = name

    @property
    def d(self) -> int:
        return self.algebra.d

    @classmethod
    def linear(cls, algebra: LieAlgebraData, matrices: Sequence[np.ndarray],
               translations: Sequence[np.ndarray], name: str = "linear") -> 'BaseAction':
        """xi_a(q) = M_a q + t_a."""
        M = np.array(matrices, dtype=float)
        t = np.array(translations, dtype=float)
        m = t.shape[1]
        return cls(algebra, m,
                   vector_field=lambda q: (M @ q + t).T,
                   derivative=lambda q: M.copy(),
                   name=name)


def trivial_action(m: int) -> BaseAction:
    return BaseAction.linear(abelian(1), [np.zeros((m, m))], [np.zeros(m)], name="trivial")


def translation_action(m: int, axes: Sequence[int] = (0,)) -> BaseAction:
    """(R^len(axes), +) translating the listed coordinates."""
    translations = [np.eye(m)[axis] for axis in axes]
    return BaseAction.linear(abelian(len(axes)), [np.zeros((m, m)) for _ in axes], translations,
                             name="translation")


def rotation_action() -> BaseAction:
    """SO(3) rotating R^3: xi_Q(q) = xi x q."""
    L = so3()
    matrices = [so3_hat(np.eye(3)[a]) for a in range(3)]
    return BaseAction.linear(L, matrices, [np.zeros(3)] * 3, name="rotation")


def momentum_covelocity(point: CovelocityPoint, action: BaseAction) -> np.ndarray:
    """J^A(q, p)(e_a) = p^A(xi_a(q)), as a k x d array."""
    X = action.vector_field(point.q)
    return point.p @ X


def covelocity_snapshot(m: int, k: int, point: CovelocityPoint, action: BaseAction,
                        tol: Tolerance = DEFAULT_TOL) -> GSpaceSnapshot:
    """Cotangent-lifted action on the bundle of k^1-covelocities over R^m."""
    if point.m != m or point.k != k or action.m != m:
        raise DimensionError(f"Point (m={point.m}, k={point.k}) / action m={action.m} vs m={m}, k={k}")
    if action.derivative is None:
        raise UnsupportedActionError(f"Action '{action.name}' has no derivative data for the lift")
    n = m * (k + 1)
    d = action.d
    X = np.asarray(action.vector_field(point.q), dtype=float).reshape(m, d)
    D = np.asarray(action.derivative(point.q), dtype=float).reshape(d, m, m)

    generators = np.zeros((n, d))
    generators[:m, :] = X
    for A in range(k):
        block = slice((A + 1) * m, (A + 2) * m)
        # lifted momentum velocity: -(dX_a/dq)^T p^A
        generators[block, :] = -np.einsum('aji,j->ia', D, point.p[A])

    jacobians = []
    for A in range(k):
        jac = np.zeros((d, n))
        jac[:, :m] = np.einsum('j,aji->ai', point.p[A], D)
        jac[:, (A + 1) * m:(A + 2) * m] = X.T
        jacobians.append(jac)

    mu = momentum_covelocity(point, action)
    return _snapshot(canonical_forms(m, k), jacobians, generators, action.algebra, mu, tol,
                     label=f"covelocity/{action.name}")


def _snapshot(forms: FormFamily, jacobians, generators, algebra: LieAlgebraData, mu: np.ndarray,
              tol: Tolerance, label: str) -> GSpaceSnapshot:
    isotropy_A = tuple(isotropy_subalgebra(algebra, [mu_A], tol) for mu_A in mu)
    return GSpaceSnapshot(
        forms=forms,
        momentum_jacobians=tuple(jacobians),
        generators=generators,
        isotropy_A=isotropy_A,
        isotropy_mu=isotropy_subalgebra(algebra, mu, tol),
        momentum=mu,
        label=label,
    )


# =============
# Product model
# =============

class ProductConfig(Enum):
    DIAGONAL = "diagonal"
    PRODUCT_GROUP = "product_group"


FACTOR_DIM = 4


def _factor_form() -> np.ndarray:
    """dq^1 ^ dp_1 + dq^2 ^ dp_2 on T*R^2 with coordinates (q1, q2, p1, p2)."""
    om = np.zeros((FACTOR_DIM, FACTOR_DIM))
    om[0:2, 2:4] = np.eye(2)
    om[2:4, 0:2] = -np.eye(2)
    return om


def product_forms() -> FormFamily:
    """omega^A = pr_A^* omega_N on N x N."""
    n = 2 * FACTOR_DIM
    forms = []
    for A in range(2):
        om = np.zeros((n, n))
        block = slice(A * FACTOR_DIM, (A + 1) * FACTOR_DIM)
        om[block, block] = _factor_form()
        forms.append(om)
    return FormFamily(tuple(forms))


def product_model_snapshot(config: ProductConfig, point: np.ndarray,
                           tol: Tolerance = DEFAULT_TOL) -> GSpaceSnapshot:
    """
    M = T*R^2 x T*R^2 with (R, +) translating q1 in each factor.

    DIAGONAL: one translation moving both factors, J^A = p1 of factor A.
    PRODUCT_GROUP: R^2 acting factorwise, J^A = (p1 of factor A) e_A.
    """
    point = np.asarray(point, dtype=float)
    if point.shape != (2 * FACTOR_DIM,):
        raise DimensionError(f"Product point must have 8 coordinates, got {point.shape}")
    n = 2 * FACTOR_DIM
    q1 = [0, FACTOR_DIM]
    p1 = [2, FACTOR_DIM + 2]
    if config == ProductConfig.DIAGONAL:
        generators = np.zeros((n, 1))
        generators[q1, 0] = 1.0
        jacobians = []
        for A in range(2):
            jac = np.zeros((1, n))
            jac[0, p1[A]] = 1.0
            jacobians.append(jac)
        mu = np.array([[point[p1[0]]], [point[p1[1]]]])
        algebra = abelian(1)
    else:
        generators = np.zeros((n, 2))
        generators[q1[0], 0] = 1.0
        generators[q1[1], 1] = 1.0
        jacobians = []
        for A in range(2):
            jac = np.zeros((2, n))
            jac[A, p1[A]] = 1.0
            jacobians.append(jac)
        mu = np.array([[point[p1[0]], 0.0], [0.0, point[p1[1]]]])
        algebra = abelian(2)
    return _snapshot(product_forms(), jacobians, generators, algebra, mu, tol,
                     label=f"product/{config.value}")


def product_level_point(mu: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    """Random point of J^-1(mu): p1 of factor A fixed to mu[A], other coordinates free."""
    point = rng.standard_normal(2 * FACTOR_DIM)
    point[2] = mu[0]
    point[FACTOR_DIM + 2] = mu[1]
    return point


# ===========
# Group model
# ===========

def group_momentum(group: Group, point: GroupModelPoint) -> np.ndarray:
    """J(g, nu) = Coad^k_g nu."""
    return coad_k(group, point.g, point.nus)


def group_level_point(group: Group, g, mu) -> GroupModelPoint:
    """The point (g, Coad^k_{g^-1} mu) of J^-1(mu)."""
    return GroupModelPoint(group.element(g), coad_k(group, group.inverse(g), mu))


def left_translate(group: Group, h, point: GroupModelPoint) -> GroupModelPoint:
    """Left action h . (g, nu) = (h g, nu)."""
    return GroupModelPoint(group.compose(h, point.g), point.nus)


def group_forms(algebra: LieAlgebraData, nus: np.ndarray) -> FormFamily:
    """
    omega^A((xi, alpha), (eta, beta)) = beta_A(xi) - alpha_A(eta) + nu_A[xi, eta]
    in coordinates (xi; beta_1, ..., beta_k).
    """
    d = algebra.d
    k = nus.shape[0]
    n = d * (k + 1)
    forms = []
    for A in range(k):
        om = np.zeros((n, n))
        om[:d, :d] = bracket_form(algebra, nus[A])
        block = slice((A + 1) * d, (A + 2) * d)
        om[:d, block] = np.eye(d)
        om[block, :d] = -np.eye(d)
        forms.append(om)
    return FormFamily(tuple(forms))


def group_covelocity_snapshot(group: Group, point: GroupModelPoint,
                              tol: Tolerance = DEFAULT_TOL) -> GSpaceSnapshot:
    """Snapshot of G x (g*)^k under left translation, in left-trivialized coordinates."""
    algebra = group.algebra
    d = algebra.d
    k = point.k
    if point.nus.shape[1] != d:
        raise DimensionError(f"Momenta of dimension {point.nus.shape[1]}, algebra has dimension {d}")
    n = d * (k + 1)
    g = group.element(point.g)
    coad_g = group.coad_matrix(g)

    generators = np.zeros((n, d))
    generators[:d, :] = group.ad_inverse_matrix(g)

    jacobians = []
    for A in range(k):
        # T J^A (eta, beta) = Coad_g (beta_A - ad*_eta nu_A)
        jac = np.zeros((d, n))
        jac[:, :d] = -coad_g @ ad_star_matrix(algebra, point.nus[A])
        jac[:, (A + 1) * d:(A + 2) * d] = coad_g
        jacobians.append(jac)

    mu = group_momentum(group, point)
    return _snapshot(group_forms(algebra, point.nus), jacobians, generators, algebra, mu, tol,
                     label=f"group/{algebra.name}")


# ====================
# k-coadjoint orbits
# ====================

@dataclass
class OrbitStructure:
    """Tangent space and polysymplectic forms of the k-coadjoint orbit through nu."""
    nus: np.ndarray
    algebra: LieAlgebraData
    generators: np.ndarray
    tangent: Subspace
    forms: FormFamily
    well_defined_residual: float

    def representative(self, w: np.ndarray) -> np.ndarray:
        """An algebra element zeta with zeta_gen(nu) = w."""
        zeta, *_ = linalg.lstsq(self.generators, np.asarray(w, dtype=float).reshape(-1))
        return zeta

    def evaluate(self, A: int, w1: np.ndarray, w2: np.ndarray) -> float:
        """omega_mu^A(w1, w2) = -nu_A[zeta_1, zeta_2] for tangent vectors w = zeta_gen(nu)."""
        z1, z2 = self.representative(w1), self.representative(w2)
        return float(-(z1 @ bracket_form(self.algebra, self.nus[A - 1]) @ z2))


def k_coadjoint_orbit_forms(nu: OrbitPoint, L: LieAlgebraData, tol: Tolerance = DEFAULT_TOL) -> OrbitStructure:
    nus = nu.nus
    if nus.shape[1] != L.d:
        raise DimensionError(f"Orbit point of dimension {nus.shape[1]}, algebra has dimension {L.d}")
    gen = coadjoint_generator_matrix(L, nus)
    tangent = orthonormal_basis(gen, tol)
    coefficients = linalg.pinv(gen) @ tangent.basis if tangent.r else np.zeros((L.d, 0))
    isotropy = kernel(gen, tol)
    forms, residual = [], 0.0
    for nu_A in nus:
        B = -bracket_form(L, nu_A)
        forms.append(coefficients.T @ B @ coefficients)
        if isotropy.r:
            residual = max(residual, float(np.max(np.abs(B @ isotropy.basis))))
    return OrbitStructure(nus, L, gen, tangent, FormFamily(tuple(forms)), residual)


# ===================
# SO(3) orbit classes
# ===================

class KKSCase(Enum):
    POINT = 1
    SPHERE = 2
    ROTATION_GROUP = 3


@dataclass
class KKSResult:
    case: KKSCase
    pi1: np.ndarray
    pi2: np.ndarray
    lambda0: Optional[float]
    coefficients: Tuple[float, float]

    def sphere_form(self, A: int, pi: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        """
        Case 2: omega^A(pi)(u, v) on the sphere through the base vector.

        Equals -c_A pi . (u x v) on the unit sphere; the 1/|pi|^2 factor keeps
        it equal to the orbit form on spheres of any radius.
        """
        if self.case != KKSCase.SPHERE:
            raise InputError(f"sphere_form is defined for case 2, got case {self.case.value}")
        pi = np.asarray(pi, dtype=float)
        return float(-self.coefficients[A - 1] * pi @ np.cross(u, v) / (pi @ pi))

    def identity_values(self) -> Dict[int, Tuple[float, float, float]]:
        """Case 3: (omega^A(Id)(x1, x2), omega^A(Id)(x2, x3), omega^A(Id)(x3, x1))."""
        if self.case != KKSCase.ROTATION_GROUP:
            raise InputError(f"identity_values is defined for case 3, got case {self.case.value}")
        values = {}
        for A, pi0 in ((1, self.pi1), (2, self.pi2)):
            values[A] = (float(-pi0[2]), float(-pi0[0]), float(-pi0[1]))
        return values

    def group_form(self, A: int, R: np.ndarray, X: np.ndarray, Y: np.ndarray) -> float:
        """
        Case 3: left-invariant form on SO(3) at R for tangent matrices
        X = R hat(xi), Y = R hat(eta): -pi0_A . (xi x eta).
        """
        if self.case != KKSCase.ROTATION_GROUP:
            raise InputError(f"group_form is defined for case 3, got case {self.case.value}")
        R = np.asarray(R, dtype=float)
        xi, eta = so3_vee(R.T @ X), so3_vee(R.T @ Y)
        pi0 = self.pi1 if A == 1 else self.pi2
        return float(-pi0 @ np.cross(xi, eta))


def kks_so3(pi1, pi2, tol: float = DEPENDENCE_TOL) -> KKSResult:
    """Classify the so(3) 2-coadjoint orbit through (pi1, pi2)."""
    pi1 = np.asarray(pi1, dtype=float)
    pi2 = np.asarray(pi2, dtype=float)
    n1, n2 = float(np.linalg.norm(pi1)), float(np.linalg.norm(pi2))
    if n1 < tol and n2 < tol:
        return KKSResult(KKSCase.POINT, pi1, pi2, None, (0.0, 0.0))
    if n1 < tol or n2 < tol:
        sine = 0.0
    else:
        sine = float(np.linalg.norm(np.cross(pi1, pi2)) / (n1 * n2))
    if sine < tol:
        if n1 >= tol:
            lambda0 = float((pi1 @ pi2) / (pi1 @ pi1))
            coefficients = (1.0, lambda0)
        else:
            lambda0 = None
            coefficients = (0.0, 1.0)
        logger.debug(f"kks: dependent pair, lambda0={lambda0}")
        return KKSResult(KKSCase.SPHERE, pi1, pi2, lambda0, coefficients)
    return KKSResult(KKSCase.ROTATION_GROUP, pi1, pi2, None, (1.0, 1.0))


def level_points(group: Group, mu, rng: np.random.Generator, samples: int) -> List[GroupModelPoint]:
    """Sampled points (g, Coad^k_{g^-1} mu) of J^-1(mu) for random g."""
    return [group_level_point(group, group.random(rng), mu) for _ in range(samples)]
