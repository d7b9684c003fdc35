"""
Polyred - Pointwise Reduction
Tangent-space verification of polysymplectic Marsden-Weinstein reduction:
momentum-map identities, the failing double-complement claim, the corrected
conditions checked two independent ways, the symplectic quotients V_A and
the reduced form family on T_x J^-1(mu) / T_x(G_mu . x).
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from internal.errors.errors import (
    DimensionError,
    InconsistentSnapshotError,
    PreconditionError,
)
from internal.polyspace.polyspace import (
    FormFamily,
    common_kernel,
    is_nondegenerate,
    k_orthogonal,
    quotient_form,
    restrict_family,
    restrict_form,
    verify_polysymplectic,
)
from internal.subspace.subspace import (
    DEFAULT_TOL,
    Subspace,
    Tolerance,
    complement_in,
    contains,
    full,
    image,
    intersect,
    intersect_all,
    kernel,
    largest_angle,
    orthonormal_basis,
    span_of,
    subspace_equal,
    zero,
)

logger = logging.getLogger(__name__)

MOMENTUM_TOL = 1e-9


class CheckStatus(Enum):
    """Outcome of a single check."""
    PASS = "pass"
    FAIL = "fail"
    MEASURED = "measured"


@dataclass
class CheckResult:
    name: str
    status: CheckStatus
    lhs_dim: Optional[int] = None
    rhs_dim: Optional[int] = None
    residual: float = 0.0
    detail: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == CheckStatus.PASS


@dataclass(frozen=True, eq=False)
class GSpaceSnapshot:
    """
    Pointwise data of a Hamiltonian polysymplectic G-space at one point x.

    momentum_jacobians[A] is d x n with row a the functional
    v -> <T_x J^A(v), e_a>; generators is n x d with column a = (e_a)_M(x).
    """
    forms: FormFamily
    momentum_jacobians: Tuple[np.ndarray, ...]
    generators: np.ndarray
    isotropy_A: Tuple[Subspace, ...]
    isotropy_mu: Subspace
    momentum: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        n, k = self.forms.n, self.forms.k
        G = np.asarray(self.generators, dtype=float)
        if G.ndim != 2:
            G = G.reshape(n, -1)
        if G.shape[0] != n:
            raise DimensionError(f"Generators have {G.shape[0]} rows, expected {n}")
        d = G.shape[1]
        jacs = tuple(np.asarray(j, dtype=float).reshape(d, n) for j in self.momentum_jacobians)
        if len(jacs) != k or len(self.isotropy_A) != k:
            raise DimensionError(f"Snapshot needs {k} jacobians and isotropies")
        for A, (om, jac) in enumerate(zip(self.forms.omegas, jacs)):
            scale = 1.0 + float(np.max(np.abs(jac), initial=0.0))
            gap = float(np.max(np.abs(G.T @ om - jac), initial=0.0))
            if gap > MOMENTUM_TOL * scale:
                raise InconsistentSnapshotError(
                    f"Momentum compatibility G^T Omega^{A + 1} = Jac^{A + 1} violated by {gap:.3e}"
                )
        for sub in (*self.isotropy_A, self.isotropy_mu):
            if sub.ambient_dim != d:
                raise DimensionError(f"Isotropy subspace in R^{sub.ambient_dim}, expected R^{d}")
        if d and not subspace_equal(self.isotropy_mu, intersect_all(*self.isotropy_A)):
            raise InconsistentSnapshotError("isotropy_mu differs from the intersection of the isotropy_A")
        G.setflags(write=False)
        object.__setattr__(self, 'generators', G)
        object.__setattr__(self, 'momentum_jacobians', jacs)

    @property
    def n(self) -> int:
        return self.forms.n

    @property
    def k(self) -> int:
        return self.forms.k

    @property
    def d(self) -> int:
        return self.generators.shape[1]


def momentum_residual(s: GSpaceSnapshot) -> float:
    """max_A |G^T Omega^A - Jac^A|."""
    return max(float(np.max(np.abs(s.generators.T @ om - jac), initial=0.0))
               for om, jac in zip(s.forms.omegas, s.momentum_jacobians))


def level_set_tangent(s: GSpaceSnapshot, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """T_x J^-1(mu) = ∩_A ker T_x J^A."""
    if s.d == 0:
        return full(s.n)
    return kernel(np.vstack(s.momentum_jacobians), tol)


def momentum_kernel(s: GSpaceSnapshot, A: int, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """ker T_x J^A with A counted from 1."""
    if s.d == 0:
        return full(s.n)
    return kernel(s.momentum_jacobians[A - 1], tol)


def orbit_tangent(s: GSpaceSnapshot, subalgebra: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Span of the generators xi_M(x) for xi in the subalgebra."""
    if subalgebra.ambient_dim != s.d:
        raise DimensionError(f"Subalgebra in R^{subalgebra.ambient_dim}, algebra has dimension {s.d}")
    if s.d == 0:
        return zero(s.n)
    return image(s.generators, subalgebra, tol, ambient_dim=s.n)


def group_orbit_tangent(s: GSpaceSnapshot, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    return orbit_tangent(s, full(s.d), tol)


def _equality(name: str, lhs: Subspace, rhs: Subspace, tol: Tolerance, **detail) -> CheckResult:
    equal = subspace_equal(lhs, rhs, tol)
    return CheckResult(
        name=name,
        status=CheckStatus.PASS if equal else CheckStatus.FAIL,
        lhs_dim=lhs.r,
        rhs_dim=rhs.r,
        residual=largest_angle(lhs, rhs),
        detail=dict(detail),
    )


def check_momentum_lemma(s: GSpaceSnapshot, tol: Tolerance = DEFAULT_TOL) -> List[CheckResult]:
    """
    T_x(G_mu . x) = T_x(G . x) ∩ T_x J^-1(mu)  and  T_x J^-1(mu) = T_x^{⊥,k}(G . x).
    """
    level = level_set_tangent(s, tol)
    orbit = group_orbit_tangent(s, tol)
    orbit_mu = orbit_tangent(s, s.isotropy_mu, tol)
    return [
        _equality("momentum_lemma_orbit", orbit_mu, intersect(orbit, level, tol), tol),
        _equality("momentum_lemma_level", level, k_orthogonal(orbit, s.forms, tol), tol),
    ]


def check_guenther_claim(s: GSpaceSnapshot, tol: Tolerance = DEFAULT_TOL) -> CheckResult:
    """
    Compares T_x(G_mu . x) with T_x^{⊥,k}(G . x) ∩ T_x^{⊥,k} J^-1(mu).

    The right-hand side equals level ∩ level^{⊥,k}, which contains the
    orbit directions but can be strictly larger when k > 1.
    """
    level = level_set_tangent(s, tol)
    orbit_mu = orbit_tangent(s, s.isotropy_mu, tol)
    rhs = intersect(k_orthogonal(group_orbit_tangent(s, tol), s.forms, tol),
                    k_orthogonal(level, s.forms, tol), tol)
    result = _equality("guenther_claim", orbit_mu, rhs, tol, level_dim=level.r)
    if not result.passed:
        logger.debug(f"Double-complement claim fails at {s.label or 'snapshot'}: dims {orbit_mu.r} vs {rhs.r}")
    return result


def characteristic_kernel(s: GSpaceSnapshot, tol: Tolerance = DEFAULT_TOL) -> Tuple[Subspace, Subspace]:
    """
    ∩_A ker(i* omega^A) at x, computed directly on the level tangent and as
    level ∩ level^{⊥,k}.
    """
    level = level_set_tangent(s, tol)
    if level.r == 0:
        return zero(s.n), zero(s.n)
    inner = common_kernel(restrict_family(s.forms, level), tol)
    direct = image(level.basis, inner, tol, ambient_dim=s.n)
    via_orthogonal = intersect(level, k_orthogonal(level, s.forms, tol), tol)
    return direct, via_orthogonal


@dataclass
class Step1Result:
    """The symplectic quotient V_A = (ker TJ^A / ker omega^A) / {[xi_M] : xi in g_{mu_A}}."""
    A: int
    form: np.ndarray
    dim: int
    nondegenerate: bool
    dims: Dict[str, int]
    orthogonality: CheckResult
    classes: Subspace
    representatives: Subspace

    def coordinates(self, vectors: np.ndarray) -> np.ndarray:
        """Coordinates in V_A of vectors lying in ker T_x J^A."""
        return self.representatives.basis.T @ (self.classes.basis.T @ vectors)


def step1_quotient(s: GSpaceSnapshot, A: int, tol: Tolerance = DEFAULT_TOL) -> Step1Result:
    omega = s.forms.omegas[A - 1]
    kernel_J = momentum_kernel(s, A, tol)
    kernel_omega, classes, omega_tilde = quotient_form(omega, tol)
    if not contains(kernel_J, kernel_omega, tol):
        raise InconsistentSnapshotError(
            f"ker omega^{A} is not contained in ker T_x J^{A} at {s.label or 'snapshot'}"
        )

    to_classes = classes.basis.T
    kernel_classes = image(to_classes, kernel_J, tol, ambient_dim=classes.r)
    generator_classes = image(to_classes, group_orbit_tangent(s, tol), tol, ambient_dim=classes.r)
    isotropy_classes = image(to_classes, orbit_tangent(s, s.isotropy_A[A - 1], tol), tol,
                             ambient_dim=classes.r)

    # ker TJ^A / ker omega^A is the omega-tilde orthogonal of the generator classes
    orthogonal = k_orthogonal(generator_classes, FormFamily((omega_tilde,)), tol) if classes.r else zero(0)
    orthogonality = _equality(f"step1_orthogonality[{A}]", kernel_classes, orthogonal, tol)

    try:
        representatives = complement_in(isotropy_classes, kernel_classes, tol)
    except PreconditionError as e:
        raise InconsistentSnapshotError(f"Isotropy orbit leaves ker T_x J^{A}: {e}") from e
    form = restrict_form(omega_tilde, representatives) if classes.r else np.zeros((0, 0))
    nondegenerate = is_nondegenerate(form, tol)
    if not nondegenerate:
        logger.warning(f"V_{A} is degenerate at {s.label or 'snapshot'} (dim {representatives.r})")
    return Step1Result(
        A=A,
        form=form,
        dim=representatives.r,
        nondegenerate=nondegenerate,
        dims={
            'ker_TJ': kernel_J.r,
            'ker_omega': kernel_omega.r,
            'isotropy_orbit': isotropy_classes.r,
        },
        orthogonality=orthogonality,
        classes=classes,
        representatives=representatives,
    )


@dataclass
class EpimorphismRoute:
    """The maps pi~^A : T_x J^-1(mu) / T_x(G_mu . x) -> V_A as matrices on the quotient basis."""
    maps: List[np.ndarray]
    target_dims: List[int]
    ranks: List[int]
    kernel_dim: int
    factorization_residual: float

    @property
    def epimorphisms(self) -> List[bool]:
        return [rank == dim for rank, dim in zip(self.ranks, self.target_dims)]

    @property
    def kernels_trivial(self) -> bool:
        return self.kernel_dim == 0


def epimorphism_route(s: GSpaceSnapshot, tol: Tolerance = DEFAULT_TOL,
                      quotient: Optional[Subspace] = None) -> EpimorphismRoute:
    """Ranks of the pi~^A and dim ∩_A ker pi~^A, plus the check i*omega^A = pi~^A* omega_{mu_A}."""
    if quotient is None:
        quotient = _quotient_basis(s, tol)[2]
    maps, dims, ranks = [], [], []
    factorization = 0.0
    for A in range(1, s.k + 1):
        step = step1_quotient(s, A, tol)
        P = step.coordinates(quotient.basis)
        maps.append(P)
        dims.append(step.dim)
        ranks.append(orthonormal_basis(P, tol).r if P.size else 0)
        if quotient.r:
            direct = restrict_form(s.forms.omegas[A - 1], quotient)
            factorization = max(factorization, float(np.max(np.abs(direct - P.T @ step.form @ P))))
    if quotient.r == 0:
        kernel_dim = 0
    else:
        kernel_dim = kernel(np.vstack(maps), tol).r if sum(dims) else quotient.r
    return EpimorphismRoute(maps, dims, ranks, kernel_dim, factorization)


@dataclass
class ConditionReport:
    cond1: List[CheckResult]
    cond2: CheckResult
    route: EpimorphismRoute
    routes_agree: bool

    @property
    def holds(self) -> bool:
        return all(c.passed for c in self.cond1) and self.cond2.passed

    def results(self) -> List[CheckResult]:
        agreement = CheckResult(
            name="routes_agree",
            status=CheckStatus.PASS if self.routes_agree else CheckStatus.FAIL,
            lhs_dim=self.route.kernel_dim,
            rhs_dim=0,
            residual=self.route.factorization_residual,
        )
        return [*self.cond1, self.cond2, agreement]


def _isotropy_orbit_sum(s: GSpaceSnapshot, A: int, tol: Tolerance) -> Subspace:
    """ker omega^A + T_x(G_{mu_A} . x)."""
    return span_of(kernel(s.forms.omegas[A - 1], tol), orbit_tangent(s, s.isotropy_A[A - 1], tol), tol=tol)


def check_reduction_conditions(s: GSpaceSnapshot, tol: Tolerance = DEFAULT_TOL) -> ConditionReport:
    level, orbit_mu, quotient = _quotient_basis(s, tol)
    cond1 = []
    for A in range(1, s.k + 1):
        rhs = span_of(level, _isotropy_orbit_sum(s, A, tol), tol=tol)
        cond1.append(_equality(f"mw_cond_1[{A}]", momentum_kernel(s, A, tol), rhs, tol))
    sums = [_isotropy_orbit_sum(s, B, tol) for B in range(1, s.k + 1)]
    rhs2 = intersect(intersect_all(*sums, tol=tol), level, tol)
    cond2 = _equality("mw_cond_2", orbit_mu, rhs2, tol)

    route = epimorphism_route(s, tol, quotient)
    agree = (all(c.passed == epi for c, epi in zip(cond1, route.epimorphisms))
             and cond2.passed == route.kernels_trivial)
    if not agree:
        logger.warning(f"Subspace route and epimorphism route disagree at {s.label or 'snapshot'}")
    for check in (*cond1, cond2):
        if not check.passed:
            logger.info(f"{check.name} fails: dims {check.lhs_dim} vs {check.rhs_dim}")
    return ConditionReport(cond1, cond2, route, agree)


@dataclass
class ReducedDiagnostics:
    well_defined_residual: float
    pullback_residual: float
    polysymplectic: bool
    characteristic_dim: int
    characteristic_agree: bool
    conditions: ConditionReport


@dataclass
class ReducedSpace:
    level_tangent: Subspace
    orbit_tangent: Subspace
    quotient_basis: Subspace
    reduced_forms: FormFamily
    diagnostics: ReducedDiagnostics

    @property
    def dim(self) -> int:
        return self.quotient_basis.r


def _quotient_basis(s: GSpaceSnapshot, tol: Tolerance) -> Tuple[Subspace, Subspace, Subspace]:
    level = level_set_tangent(s, tol)
    orbit_mu = orbit_tangent(s, s.isotropy_mu, tol)
    try:
        quotient = complement_in(orbit_mu, level, tol)
    except PreconditionError as e:
        raise InconsistentSnapshotError(f"G_mu orbit leaves the level set: {e}") from e
    return level, orbit_mu, quotient


def reduced_forms(s: GSpaceSnapshot, tol: Tolerance = DEFAULT_TOL,
                  rng: Optional[np.random.Generator] = None, pairs: int = 50) -> ReducedSpace:
    """
    Reduced family omega_mu^A on the quotient basis with its diagnostics.

    Failed conditions do not raise: the resulting family is returned and the
    diagnostics report the degeneracy.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    level, orbit_mu, quotient = _quotient_basis(s, tol)
    reduced = restrict_family(s.forms, quotient)

    well_defined = 0.0
    if orbit_mu.r and level.r:
        well_defined = max(float(np.max(np.abs(orbit_mu.basis.T @ om @ level.basis)))
                           for om in s.forms.omegas)

    pullback = 0.0
    if level.r:
        for _ in range(pairs):
            u = level.basis @ rng.standard_normal(level.r)
            v = level.basis @ rng.standard_normal(level.r)
            cu, cv = quotient.basis.T @ u, quotient.basis.T @ v
            for A in range(s.k):
                lhs = float(cu @ reduced.omegas[A] @ cv) if quotient.r else 0.0
                pullback = max(pullback, abs(lhs - float(u @ s.forms.omegas[A] @ v)))

    direct, via_orthogonal = characteristic_kernel(s, tol)
    polysymplectic = verify_polysymplectic(reduced, tol)
    conditions = check_reduction_conditions(s, tol)
    if conditions.holds and not polysymplectic:
        logger.warning(f"Conditions hold but reduced family is degenerate at {s.label or 'snapshot'}")
    diagnostics = ReducedDiagnostics(
        well_defined_residual=well_defined,
        pullback_residual=pullback,
        polysymplectic=polysymplectic,
        characteristic_dim=direct.r,
        characteristic_agree=subspace_equal(direct, via_orthogonal, tol),
        conditions=conditions,
    )
    return ReducedSpace(level, orbit_mu, quotient, reduced, diagnostics)

