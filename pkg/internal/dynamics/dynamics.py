"""
Polyred - Dynamics
Hamiltonian polysymplectic systems: solving flat(X) = dH, the explicit
group-model k-vector field and its reduction to k-coadjoint orbits, fourth
order integration (Lie-group stepping for group states), conservation
monitoring, projection commutation and harmonic-map sheets.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import integrate as sp_integrate
from scipy import linalg

from internal.errors.errors import DivergenceError, InputError, LevelSetError, NoSolutionError
from internal.liealg.liealg import (
    Group,
    LieAlgebraData,
    ad_star,
    bracket,
    coad_k,
    metric_sharp,
    so3,
)
from internal.models.models import GroupModelPoint, KKSCase, OrbitPoint, group_momentum, kks_so3
from internal.polyspace.polyspace import FormFamily, PolySymplecticSpace, flat_matrix

logger = logging.getLogger(__name__)

SOLVE_TOL = 1e-10
LEVEL_TOL = 1e-9
HARMONIC_INERTIA = (1.0, 2.0, 3.0)

State = Union[GroupModelPoint, OrbitPoint, np.ndarray]


# =====================
# Hamiltonian equation
# =====================

def solve_hamiltonian_field(forms: Union[PolySymplecticSpace, FormFamily], dH: np.ndarray,
                            tol: float = SOLVE_TOL) -> List[np.ndarray]:
    """Minimum-norm (X_1, ..., X_k) with sum_A i_{X_A} omega^A = dH."""
    family = forms.forms if isinstance(forms, PolySymplecticSpace) else forms
    dH = np.asarray(dH, dtype=float)
    if dH.shape != (family.n,):
        raise InputError(f"dH of shape {dH.shape}, expected ({family.n},)")
    F = flat_matrix(family)
    stacked, *_ = linalg.lstsq(F, dH)
    residual = float(np.linalg.norm(F @ stacked - dH))
    if residual > tol * (1.0 + float(np.linalg.norm(dH))):
        raise NoSolutionError(f"dH is outside the range of flat (residual {residual:.3e})")
    return list(stacked.reshape(family.k, family.n))


def hamiltonian_value(algebra: LieAlgebraData, nus: np.ndarray) -> float:
    """H = 1/2 sum_A <nu_A, nu_A> with the metric induced on g*."""
    return float(0.5 * sum(nu @ metric_sharp(algebra, nu) for nu in np.atleast_2d(nus)))


def group_hamiltonian_differential(point: GroupModelPoint, algebra: LieAlgebraData) -> np.ndarray:
    """dH in left-trivialized coordinates (eta; beta_1, ..., beta_k)."""
    d = algebra.d
    dH = np.zeros(d * (point.k + 1))
    for A, nu in enumerate(point.nus):
        dH[(A + 1) * d:(A + 2) * d] = metric_sharp(algebra, nu)
    return dH


def group_hamiltonian_field(point: GroupModelPoint, algebra: LieAlgebraData) -> List[np.ndarray]:
    """X_A = (sharp nu_A; ad*_{sharp nu_A} nu_1, ..., ad*_{sharp nu_A} nu_k)."""
    fields = []
    for nu_A in point.nus:
        xi = metric_sharp(algebra, nu_A)
        fields.append(np.concatenate([xi, *(ad_star(algebra, xi, nu_B) for nu_B in point.nus)]))
    return fields


def reduced_orbit_field(nu: OrbitPoint, A: int, algebra: LieAlgebraData) -> np.ndarray:
    """Component B of field A is ad*_{sharp nu_A} nu_B."""
    xi = metric_sharp(algebra, nu.nus[A - 1])
    return np.array([ad_star(algebra, xi, nu_B) for nu_B in nu.nus])


class KVectorFieldEval:
    """Maps a state to its k tangent vectors (X_1(x), ..., X_k(x))."""

    def __init__(self, k: int):
        self.k = k

    def evaluate(self, state) -> List[np.ndarray]:
        raise NotImplementedError("Subclasses must implement evaluate()")

    def component(self, state, A: int) -> np.ndarray:
        return self.evaluate(state)[A - 1]


class GroupModelField(KVectorFieldEval):
    """Explicit Hamiltonian k-vector field on G x (g*)^k."""

    def __init__(self, group: Group, k: int):
        super().__init__(k)
        self.group = group
        self.algebra = group.algebra

    def evaluate(self, state: GroupModelPoint) -> List[np.ndarray]:
        return group_hamiltonian_field(state, self.algebra)


class ReducedOrbitField(KVectorFieldEval):
    """Reduced k-vector field on a k-coadjoint orbit."""

    def __init__(self, algebra: LieAlgebraData, k: int):
        super().__init__(k)
        self.algebra = algebra

    def evaluate(self, state: OrbitPoint) -> List[np.ndarray]:
        return [reduced_orbit_field(state, A, self.algebra) for A in range(1, self.k + 1)]

    def component(self, state: OrbitPoint, A: int) -> np.ndarray:
        return reduced_orbit_field(state, A, self.algebra)


class FunctionField(KVectorFieldEval):
    """k-vector field on R^n given by a function returning k vectors."""

    def __init__(self, k: int, fn: Callable[[np.ndarray], Sequence[np.ndarray]]):
        super().__init__(k)
        self.fn = fn

    def evaluate(self, state: np.ndarray) -> List[np.ndarray]:
        return [np.asarray(v, dtype=float) for v in self.fn(state)]


# ===========
# Integration
# ===========

@dataclass
class InvariantModel:
    """Quantities monitored along a trajectory."""
    algebra: LieAlgebraData
    group: Optional[Group] = None
    mu: Optional[np.ndarray] = None


def invariant_values(state: State, model: InvariantModel) -> Dict[str, float]:
    if isinstance(state, np.ndarray):
        return {}
    nus = state.nus
    values: Dict[str, float] = {}
    if model.algebra.metric is not None:
        values['H'] = hamiltonian_value(model.algebra, nus)
    for A in range(nus.shape[0]):
        for B in range(A, nus.shape[0]):
            values[f'inv_{A + 1}{B + 1}'] = float(nus[A] @ nus[B])
    if isinstance(state, GroupModelPoint) and model.group is not None and model.mu is not None:
        values['momentum_error'] = float(np.max(np.abs(group_momentum(model.group, state) - model.mu)))
    return values


@dataclass
class Trajectory:
    times: np.ndarray
    states: List[State]
    invariant_log: List[Dict[str, float]] = field(default_factory=list)

    @property
    def final(self) -> State:
        return self.states[-1]


def _dexpinv_left(algebra: LieAlgebraData, u: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Solves xi = dexp_{-u}(u_dot) for u_dot, truncated after the double bracket."""
    first = bracket(algebra, u, xi)
    return xi + 0.5 * first + bracket(algebra, u, first) / 12.0


def _group_step(field: GroupModelField, A: int, x: GroupModelPoint, h: float) -> GroupModelPoint:
    """One Runge-Kutta-Munthe-Kaas step with g <- g exp(u)."""
    group, algebra = field.group, field.algebra
    d = algebra.d

    def stage(u, nus):
        g = group.compose(x.g, group.exp(u)) if np.any(u) else x.g
        v = field.component(GroupModelPoint(g, nus), A)
        return h * _dexpinv_left(algebra, u, v[:d]), h * v[d:].reshape(-1, d)

    K1, L1 = stage(np.zeros(d), x.nus)
    K2, L2 = stage(K1 / 2, x.nus + L1 / 2)
    K3, L3 = stage(K2 / 2, x.nus + L2 / 2)
    K4, L4 = stage(K3, x.nus + L3)
    u = (K1 + 2 * K2 + 2 * K3 + K4) / 6
    nus = x.nus + (L1 + 2 * L2 + 2 * L3 + L4) / 6
    return GroupModelPoint(group.compose(x.g, group.exp(u)), nus)


def _linear_step(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    K1 = h * f(x)
    K2 = h * f(x + K1 / 2)
    K3 = h * f(x + K2 / 2)
    K4 = h * f(x + K3)
    return x + (K1 + 2 * K2 + 2 * K3 + K4) / 6


def _step(field: KVectorFieldEval, A: int, x: State, h: float) -> State:
    if isinstance(x, GroupModelPoint):
        return _group_step(field, A, x, h)
    if isinstance(x, OrbitPoint):
        return OrbitPoint(_linear_step(lambda nus: field.component(OrbitPoint(nus), A), x.nus, h))
    return _linear_step(lambda v: field.component(v, A), np.asarray(x, dtype=float), h)


def _is_finite(x: State) -> bool:
    if isinstance(x, GroupModelPoint):
        g = x.g.R if hasattr(x.g, 'R') else x.g
        return bool(np.all(np.isfinite(g)) and np.all(np.isfinite(x.nus)))
    if isinstance(x, OrbitPoint):
        return bool(np.all(np.isfinite(x.nus)))
    return bool(np.all(np.isfinite(x)))


def group_projection(group: Group) -> Callable[[GroupModelPoint], GroupModelPoint]:
    """Re-orthonormalizes the group component of a state."""
    return lambda x: GroupModelPoint(group.project(x.g), x.nus)


def _checked_step(field: KVectorFieldEval, A: int, x: State, h: float, i: int,
                  projection: Optional[Callable[[State], State]]) -> State:
    try:
        with np.errstate(over='ignore', invalid='ignore'):
            x = _step(field, A, x, h)
    except (ValueError, linalg.LinAlgError) as e:
        logger.error(f"Integration left the state space at step {i}: {e}")
        raise DivergenceError(f"Integration left the state space at step {i}: {e}", step=i) from e
    if not _is_finite(x):
        logger.error(f"Non-finite state at step {i}")
        raise DivergenceError(f"Non-finite state at step {i}", step=i)
    return projection(x) if projection is not None else x


def _step_count(duration: float, dt: float) -> int:
    return int(math.ceil(abs(duration) / dt - 1e-9))


def integrate(field: KVectorFieldEval, A: int, x0: State, t_end: float, dt: float,
              projection: Optional[Callable[[State], State]] = None,
              invariants: Optional[InvariantModel] = None) -> Trajectory:
    """Fourth-order integration of the single field X_A on a uniform grid ending at t_end."""
    if not dt > 0:
        raise InputError(f"dt must be positive, got {dt}")
    if t_end < 0:
        raise InputError(f"t_end must be non-negative, got {t_end}")
    if not 1 <= A <= field.k:
        raise InputError(f"Component {A} out of range 1..{field.k}")
    steps = _step_count(t_end, dt)
    h = t_end / steps if steps else dt
    times = np.arange(steps + 1) * h
    states = [x0]
    log = [invariant_values(x0, invariants)] if invariants else []
    x = x0
    for i in range(1, steps + 1):
        x = _checked_step(field, A, x, h, i, projection)
        states.append(x)
        if invariants:
            log.append(invariant_values(x, invariants))
    return Trajectory(times, states, log)


def flow(field: KVectorFieldEval, A: int, x: State, duration: float, dt: float,
         projection: Optional[Callable[[State], State]] = None) -> State:
    """State after following X_A for `duration` (negative durations run backwards)."""
    steps = _step_count(duration, dt)
    if steps == 0:
        return x
    h = duration / steps
    for i in range(1, steps + 1):
        x = _checked_step(field, A, x, h, i, projection)
    return x


@dataclass
class ConservationReport:
    drifts: Dict[str, float]
    momentum_error: Optional[float] = None

    @property
    def max_drift(self) -> float:
        return max(self.drifts.values(), default=0.0)


def conservation_report(traj: Trajectory, model: InvariantModel) -> ConservationReport:
    """Max drift of H and the pairings nu_A . nu_B, and the momentum error along unreduced states."""
    log = traj.invariant_log or [invariant_values(x, model) for x in traj.states]
    drifts: Dict[str, float] = {}
    momentum = None
    if log:
        for name in log[0]:
            series = np.array([entry[name] for entry in log])
            if name == 'momentum_error':
                momentum = float(np.max(series))
            else:
                drifts[name] = float(np.max(np.abs(series - series[0])))
    return ConservationReport(drifts, momentum)


# ======================
# Projection commutation
# ======================

@dataclass
class CommutationReport:
    sup_discrepancy: float
    nu_discrepancy: float
    momentum_drift: float
    unreduced: Trajectory
    reduced: Trajectory


def projection_commutation_check(group: Group, mu: np.ndarray, x0: GroupModelPoint, t_end: float, dt: float,
                                 A: int = 1, tol: float = LEVEL_TOL) -> CommutationReport:
    """
    Integrates X_A on G x (g*)^k and its reduction on the orbit from matching
    data, comparing Coad^k_{g(t)^-1} mu and the nu-components with the reduced
    trajectory.
    """
    mu = np.atleast_2d(np.asarray(mu, dtype=float))
    off = float(np.max(np.abs(group_momentum(group, x0) - mu)))
    if off > tol * (1.0 + float(np.max(np.abs(mu)))):
        raise LevelSetError(f"Initial state is {off:.3e} away from J^-1(mu)")
    k = x0.k
    model = InvariantModel(group.algebra, group, mu)
    unreduced = integrate(GroupModelField(group, k), A, x0, t_end, dt,
                          projection=group_projection(group), invariants=model)
    reduced = integrate(ReducedOrbitField(group.algebra, k), A, OrbitPoint(x0.nus), t_end, dt,
                        invariants=InvariantModel(group.algebra))
    sup, nu_gap = 0.0, 0.0
    for x, y in zip(unreduced.states, reduced.states):
        projected = coad_k(group, group.inverse(x.g), mu)
        sup = max(sup, float(np.max(np.abs(projected - y.nus))))
        nu_gap = max(nu_gap, float(np.max(np.abs(x.nus - y.nus))))
    drift = conservation_report(unreduced, model).momentum_error or 0.0
    logger.info(f"Commutation check (A={A}, dt={dt}): sup discrepancy {sup:.3e}, momentum drift {drift:.3e}")
    return CommutationReport(sup, nu_gap, drift, unreduced, reduced)


# ================
# Harmonic sheets
# ================

@dataclass
class HarmonicSheet:
    s_values: np.ndarray
    t_values: np.ndarray
    points: np.ndarray
    case: KKSCase
    lambda0: Optional[float]
    commutator: float
    proportionality_residual: Optional[float]
    dirichlet_energy: Optional[float]


def harmonic_algebra(inertia: Sequence[float] = HARMONIC_INERTIA) -> LieAlgebraData:
    return so3(np.diag(np.asarray(inertia, dtype=float)))


def harmonic_sheet(pi1, pi2, s_values, t_values, dt: float,
                   algebra: Optional[LieAlgebraData] = None, max_workers: int = 1) -> HarmonicSheet:
    """
    gamma(s, t) = F^2_t o F^1_s (nu_0) on the 2-coadjoint orbit of so(3)*, with
    the corner commutator, the case-2 proportionality residual and the
    discrete Dirichlet energy.
    """
    algebra = algebra if algebra is not None else harmonic_algebra()
    s_values = np.asarray(s_values, dtype=float).reshape(-1)
    t_values = np.asarray(t_values, dtype=float).reshape(-1)
    if s_values.size == 0 or t_values.size == 0:
        raise InputError("Sheet grid must be non-empty")
    if not dt > 0:
        raise InputError(f"dt must be positive, got {dt}")
    field = ReducedOrbitField(algebra, 2)
    nu0 = OrbitPoint(np.array([pi1, pi2], dtype=float))
    kks = kks_so3(pi1, pi2)

    starts = []
    x, s_prev = nu0, 0.0
    for s in s_values:
        x = flow(field, 1, x, s - s_prev, dt)
        starts.append(x)
        s_prev = s

    def row(start: OrbitPoint) -> np.ndarray:
        out, y, t_prev = [], start, 0.0
        for t in t_values:
            y = flow(field, 2, y, t - t_prev, dt)
            out.append(y.nus)
            t_prev = t
        return np.array(out)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(row, starts))
    else:
        rows = [row(start) for start in starts]
    points = np.array(rows)

    commutator = 0.0
    for s in {s_values[0], s_values[-1]}:
        for t in {t_values[0], t_values[-1]}:
            a = flow(field, 1, flow(field, 2, nu0, t, dt), s, dt)
            b = flow(field, 2, flow(field, 1, nu0, s, dt), t, dt)
            commutator = max(commutator, float(np.max(np.abs(a.nus - b.nus))))

    proportionality = None
    if kks.case == KKSCase.SPHERE and kks.lambda0 is not None:
        proportionality = 0.0
        for nus in points.reshape(-1, 2, algebra.d):
            y = OrbitPoint(nus)
            gap = field.component(y, 2) - kks.lambda0 * field.component(y, 1)
            proportionality = max(proportionality, float(np.max(np.abs(gap))))

    energy = None
    if s_values.size > 1 and t_values.size > 1:
        d_s = np.gradient(points, s_values, axis=0)
        d_t = np.gradient(points, t_values, axis=1)
        density = 0.5 * (np.sum(d_s ** 2, axis=(2, 3)) + np.sum(d_t ** 2, axis=(2, 3)))
        energy = float(sp_integrate.trapezoid(sp_integrate.trapezoid(density, t_values, axis=1), s_values))

    if kks.case == KKSCase.ROTATION_GROUP:
        logger.info(f"Independent pair: measured flow commutator {commutator:.3e}")
    return HarmonicSheet(s_values, t_values, points, kks.case, kks.lambda0, commutator, proportionality, energy)
