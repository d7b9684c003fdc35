"""
Polyred - Command Line Interface
Runs the named experiments over sampled points and emits JSON reports
(plus CSV for trajectories and sheets).

Exit codes: 0 when every expectation is met, 1 when a check does not meet
its expectation, 2 on usage, configuration or input errors.
"""
import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy

from internal import __version__
from internal.config.config import Config
from internal.dynamics.dynamics import (
    InvariantModel,
    ReducedOrbitField,
    conservation_report,
    harmonic_algebra,
    harmonic_sheet,
    integrate,
    projection_commutation_check,
)
from internal.errors.errors import InputError, PolyredError
from internal.liealg.liealg import SO3Group, coad_k, coadjoint_generator, random_rotation, so3_hat
from internal.models.models import (
    CovelocityPoint,
    KKSCase,
    OrbitPoint,
    ProductConfig,
    covelocity_snapshot,
    group_covelocity_snapshot,
    group_level_point,
    k_coadjoint_orbit_forms,
    kks_so3,
    level_points,
    product_level_point,
    product_model_snapshot,
    rotation_action,
)
from internal.reduction.reduction import (
    CheckResult,
    CheckStatus,
    GSpaceSnapshot,
    check_guenther_claim,
    check_momentum_lemma,
    level_set_tangent,
    reduced_forms,
)
from internal.report.report import Report, write_sheet_csv, write_trajectory_csv
from internal.subspace.subspace import Tolerance

logger = logging.getLogger(__name__)

COMMANDS = ('counterexample', 'verify', 'kks', 'integrate', 'harmonic')
MODELS = ('group', 'covelocity', 'product', 'diagonal', 'failing')

PULLBACK_TOL = 1e-10
ORBIT_AGREEMENT_TOL = 1e-9
KKS_TOL = 1e-10
DRIFT_TOL = 1e-8
COMMUTATION_TOL = 1e-6
MOMENTUM_DRIFT_TOL = 1e-7
PROPORTIONALITY_TOL = 1e-14
SHEET_COMMUTATOR_TOL = 1e-8

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

PASS = CheckStatus.PASS
FAIL = CheckStatus.FAIL


def _status(ok: bool) -> CheckStatus:
    return PASS if ok else FAIL


def _prefixed(prefix: str, results: Sequence[CheckResult]) -> List[CheckResult]:
    return [replace(r, name=f"{prefix}.{r.name}") for r in results]


def _parallel_map(fn: Callable, items: Sequence, workers: int) -> List:
    """Order-preserving map; results come back in sample order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _metadata(cfg: Config) -> Dict:
    tol = cfg.tolerance()
    return {
        'seed': cfg.get('run.seed'),
        'samples': cfg.get('run.samples'),
        'tolerance': {'rank_rel': tol.rank_rel, 'eq_abs': tol.eq_abs},
        'versions': {'polyred': __version__, 'numpy': np.__version__, 'scipy': scipy.__version__},
    }


def _samples(cfg: Config) -> int:
    samples = cfg.get_int('run.samples')
    if samples < 1:
        raise InputError(f"samples must be at least 1, got {samples}")
    return samples


def _mu(cfg: Config) -> np.ndarray:
    mu = np.atleast_2d(cfg.get_array('models.mu'))
    if mu.shape[1] != 3:
        raise InputError(f"mu must be k covectors of so(3)*, got shape {mu.shape}")
    return mu


def _pi_pair(cfg: Config) -> Tuple[np.ndarray, np.ndarray]:
    """pi2 from the configuration, or lambda0 * pi1 when pi2 is unset."""
    pi1 = cfg.get_array('models.pi1')
    if cfg.get('models.pi2') is not None:
        pi2 = cfg.get_array('models.pi2')
    elif cfg.get('models.lambda0') is not None:
        pi2 = cfg.get_float('models.lambda0') * pi1
    else:
        raise InputError("Either models.pi2 or models.lambda0 must be set")
    if pi1.shape != (3,) or pi2.shape != (3,):
        raise InputError(f"pi1 and pi2 must be 3-vectors, got {pi1.shape} and {pi2.shape}")
    return pi1, pi2


def _reduced_results(s: GSpaceSnapshot, tol: Tolerance, rng: np.random.Generator) -> Tuple[List[CheckResult], int]:
    """Reduction conditions, both routes, and the diagnostics of the reduced family."""
    red = reduced_forms(s, tol, rng=rng)
    diag = red.diagnostics
    results = diag.conditions.results() + [
        CheckResult("reduced_polysymplectic", _status(diag.polysymplectic), red.dim, red.dim),
        CheckResult("pullback", _status(diag.pullback_residual < PULLBACK_TOL), residual=diag.pullback_residual),
        CheckResult("characteristic_kernel", _status(diag.characteristic_agree),
                    diag.characteristic_dim, diag.characteristic_dim),
    ]
    return results, red.dim


# ===============
# counterexample
# ===============

def cmd_counterexample(cfg: Config) -> Report:
    """
    Diagonal translation on T*R^2 x T*R^2: the orbit lemma holds while the
    double-complement description of the isotropy orbit fails. The
    product-group action on the same space satisfies the reduction
    conditions.
    """
    tol = cfg.tolerance()
    seed = cfg.get_int('run.seed')
    samples = _samples(cfg)
    mu = cfg.get_array('models.product_mu').tolist()
    rng = np.random.default_rng(seed)
    points = [product_level_point(mu, rng) for _ in range(samples)]

    def run(indexed):
        i, point = indexed
        diagonal = product_model_snapshot(ProductConfig.DIAGONAL, point, tol)
        results = check_momentum_lemma(diagonal, tol) + [check_guenther_claim(diagonal, tol)]
        _, diagonal_dim = _reduced_results(diagonal, tol, np.random.default_rng([seed, i]))
        product = product_model_snapshot(ProductConfig.PRODUCT_GROUP, point, tol)
        product_results, product_dim = _reduced_results(product, tol, np.random.default_rng([seed, i]))
        return results + _prefixed("product_group", product_results), diagonal_dim, product_dim

    outcomes = _parallel_map(run, list(enumerate(points)), cfg.max_workers())
    report = Report('counterexample', metadata=_metadata(cfg))
    report.add_samples([o[0] for o in outcomes], {
        'momentum_lemma_orbit': PASS,
        'momentum_lemma_level': PASS,
        'guenther_claim': FAIL,
        'product_group.*': PASS,
    })
    claim = report.records['guenther_claim']
    report.summary = {
        'orbit_dim': claim.lhs_dim,
        'double_complement_dim': claim.rhs_dim,
        'diagonal_reduced_dim': outcomes[0][1],
        'product_group_reduced_dim': outcomes[0][2],
    }
    logger.info(f"Counterexample: orbit dim {claim.lhs_dim} vs double complement dim {claim.rhs_dim}")
    return report


# ======
# verify
# ======

def _orbit_agreement(s: GSpaceSnapshot, point, group: SO3Group, rng: np.random.Generator,
                     pairs: int = 10) -> CheckResult:
    """Reduced forms on level vectors against the closed-form orbit forms -nu_A[xi, eta]."""
    level = level_set_tangent(s)
    d = group.algebra.d
    orbit = k_coadjoint_orbit_forms(OrbitPoint(point.nus), group.algebra)
    residual = 0.0
    for _ in range(pairs):
        u = level.basis @ rng.standard_normal(level.r)
        v = level.basis @ rng.standard_normal(level.r)
        for A in range(1, s.k + 1):
            lhs = float(u @ s.forms.omegas[A - 1] @ v)
            rhs = orbit.evaluate(A, u[d:], v[d:])
            residual = max(residual, abs(lhs - rhs))
    return CheckResult("orbit_agreement", _status(residual < ORBIT_AGREEMENT_TOL), residual=residual)


def cmd_verify(cfg: Config) -> Report:
    """Reduction conditions, reduced family and diagnostics at sampled points of one model."""
    tol = cfg.tolerance()
    seed = cfg.get_int('run.seed')
    samples = _samples(cfg)
    model = cfg.get('run.model')
    if model not in MODELS:
        raise InputError(f"Unknown model {model!r}, expected one of {', '.join(MODELS)}")
    rng = np.random.default_rng(seed)

    if model == 'group':
        group = SO3Group()
        mu = _mu(cfg)
        points = level_points(group, mu, rng, samples)
        build = lambda p: group_covelocity_snapshot(group, p, tol)  # noqa: E731
    elif model == 'covelocity':
        action = rotation_action()
        points = [CovelocityPoint(rng.standard_normal(3), rng.standard_normal((2, 3))) for _ in range(samples)]
        build = lambda p: covelocity_snapshot(3, 2, p, action, tol)  # noqa: E731
    else:
        config = ProductConfig.PRODUCT_GROUP if model == 'product' else ProductConfig.DIAGONAL
        mu = cfg.get_array('models.product_mu').tolist()
        points = [product_level_point(mu, rng) for _ in range(samples)]
        build = lambda p: product_model_snapshot(config, p, tol)  # noqa: E731

    def run(indexed):
        i, point = indexed
        s = build(point)
        sample_rng = np.random.default_rng([seed, i])
        results, dim = _reduced_results(s, tol, sample_rng)
        if model == 'group':
            results.append(_orbit_agreement(s, point, group, sample_rng))
        return results, dim

    outcomes = _parallel_map(run, list(enumerate(points)), cfg.max_workers())
    report = Report('verify', metadata={**_metadata(cfg), 'model': model})
    report.add_samples([o[0] for o in outcomes], {'*': PASS})
    report.summary = {'reduced_dim': outcomes[0][1]}
    return report


# ===
# kks
# ===

def cmd_kks(cfg: Config) -> Report:
    """Classifies the so(3) 2-coadjoint orbit and checks its closed-form forms against the orbit forms."""
    seed = cfg.get_int('run.seed')
    samples = _samples(cfg)
    pi1, pi2 = _pi_pair(cfg)
    kks = kks_so3(pi1, pi2, cfg.get_float('tolerance.dependence'))
    L = SO3Group().algebra
    rng = np.random.default_rng(seed)
    report = Report('kks', metadata=_metadata(cfg))
    results: List[CheckResult] = []

    if kks.case == KKSCase.POINT:
        orbit = k_coadjoint_orbit_forms(OrbitPoint([pi1, pi2]), L)
        results.append(CheckResult("kks_point", _status(orbit.tangent.r == 0), orbit.tangent.r, 0))
    elif kks.case == KKSCase.SPHERE:
        base = pi1 if kks.coefficients[0] else pi2
        residual = 0.0
        for _ in range(samples):
            R = random_rotation(rng)
            nus = coad_k(SO3Group(), R, [pi1, pi2])
            orbit = k_coadjoint_orbit_forms(OrbitPoint(nus), L)
            pi = R.R @ base
            z1, z2 = rng.standard_normal(3), rng.standard_normal(3)
            w1, w2 = coadjoint_generator(L, z1, nus), coadjoint_generator(L, z2, nus)
            for A in (1, 2):
                lhs = kks.sphere_form(A, pi, np.cross(z1, pi), np.cross(z2, pi))
                residual = max(residual, abs(lhs - orbit.evaluate(A, w1.reshape(-1), w2.reshape(-1))))
        results.append(CheckResult("kks_sphere", _status(residual < KKS_TOL), 2, 2, residual))
    else:
        orbit = k_coadjoint_orbit_forms(OrbitPoint([pi1, pi2]), L)
        gens = [coadjoint_generator(L, e, [pi1, pi2]).reshape(-1) for e in np.eye(3)]
        identity = kks.identity_values()
        residual = 0.0
        for A in (1, 2):
            measured = (orbit.evaluate(A, gens[0], gens[1]),
                        orbit.evaluate(A, gens[1], gens[2]),
                        orbit.evaluate(A, gens[2], gens[0]))
            residual = max(residual, max(abs(a - b) for a, b in zip(measured, identity[A])))
        results.append(CheckResult("kks_identity", _status(residual < KKS_TOL), 3, orbit.tangent.r, residual))
        residual = 0.0
        for _ in range(samples):
            R = random_rotation(rng)
            nus = coad_k(SO3Group(), R, [pi1, pi2])
            moved = k_coadjoint_orbit_forms(OrbitPoint(nus), L)
            xi, eta = rng.standard_normal(3), rng.standard_normal(3)
            w1 = coadjoint_generator(L, R.R @ xi, nus).reshape(-1)
            w2 = coadjoint_generator(L, R.R @ eta, nus).reshape(-1)
            for A in (1, 2):
                lhs = kks.group_form(A, R.R, R.R @ so3_hat(xi), R.R @ so3_hat(eta))
                residual = max(residual, abs(lhs - moved.evaluate(A, w1, w2)))
        results.append(CheckResult("kks_group_form", _status(residual < KKS_TOL), 3, 3, residual))

    report.add_samples([results], {'*': PASS})
    report.summary = {
        'case': kks.case.value,
        'lambda0': kks.lambda0,
        'coefficients': list(kks.coefficients),
        'pi1': pi1.tolist(),
        'pi2': pi2.tolist(),
    }
    if kks.case == KKSCase.ROTATION_GROUP:
        report.summary['identity_values'] = {str(A): list(v) for A, v in kks.identity_values().items()}
    return report


# =========
# integrate
# =========

def cmd_integrate(cfg: Config, csv_path: Optional[str] = None) -> Report:
    """Reduced flow conservation and the unreduced/reduced commutation check."""
    seed = cfg.get_int('run.seed')
    dt = cfg.get_float('dynamics.dt')
    t_end = cfg.get_float('dynamics.t_end')
    A = cfg.get_int('dynamics.component')
    if dt <= 0:
        raise InputError(f"dt must be positive, got {dt}")
    group = SO3Group(np.diag(cfg.get_array('dynamics.metric')))
    L = group.algebra
    mu = _mu(cfg)
    k = mu.shape[0]

    model = InvariantModel(L)
    traj = integrate(ReducedOrbitField(L, k), A, OrbitPoint(mu), t_end, dt, invariants=model)
    conservation = conservation_report(traj, model)
    if csv_path:
        write_trajectory_csv(traj, csv_path)

    x0 = group_level_point(group, group.random(np.random.default_rng(seed)), mu)
    commutation = projection_commutation_check(group, mu, x0, t_end, dt, A=A)

    report = Report('integrate', metadata={**_metadata(cfg), 'dt': dt, 't_end': t_end, 'component': A})
    report.add_samples([[
        CheckResult("reduced_conservation", _status(conservation.max_drift < DRIFT_TOL),
                    residual=conservation.max_drift),
        CheckResult("commutation", _status(commutation.sup_discrepancy < COMMUTATION_TOL),
                    residual=commutation.sup_discrepancy),
        CheckResult("momentum_drift", _status(commutation.momentum_drift < MOMENTUM_DRIFT_TOL),
                    residual=commutation.momentum_drift),
    ]], {'*': PASS})
    report.summary = {
        'drifts': conservation.drifts,
        'sup_discrepancy': commutation.sup_discrepancy,
        'nu_discrepancy': commutation.nu_discrepancy,
        'momentum_drift': commutation.momentum_drift,
        'steps': len(traj.states) - 1,
    }
    return report


# ========
# harmonic
# ========

def cmd_harmonic(cfg: Config, csv_path: Optional[str] = None) -> Report:
    """Sheet gamma(s, t) = F^2_t o F^1_s(nu_0) with its diagnostics."""
    dt = cfg.get_float('dynamics.dt')
    if dt <= 0:
        raise InputError(f"dt must be positive, got {dt}")
    size = cfg.get_int('dynamics.grid')
    if size < 2:
        raise InputError(f"grid must have at least 2 points per side, got {size}")
    extent = cfg.get_float('dynamics.grid_extent')
    pi1, pi2 = _pi_pair(cfg)
    grid = np.linspace(0.0, extent, size)
    algebra = harmonic_algebra(cfg.get_array('dynamics.harmonic_inertia'))
    sheet = harmonic_sheet(pi1, pi2, grid, grid, dt, algebra=algebra, max_workers=cfg.max_workers())
    if csv_path:
        write_sheet_csv(sheet, csv_path)

    results = []
    if sheet.case == KKSCase.ROTATION_GROUP:
        results.append(CheckResult("sheet_commutator", CheckStatus.MEASURED, residual=sheet.commutator))
    else:
        results.append(CheckResult("sheet_commutator", _status(sheet.commutator < SHEET_COMMUTATOR_TOL),
                                   residual=sheet.commutator))
    if sheet.proportionality_residual is not None:
        results.append(CheckResult("proportionality", _status(sheet.proportionality_residual < PROPORTIONALITY_TOL),
                                   residual=sheet.proportionality_residual))

    report = Report('harmonic', metadata={**_metadata(cfg), 'dt': dt, 'grid': size, 'grid_extent': extent})
    expectations = {'proportionality': PASS}
    if sheet.case != KKSCase.ROTATION_GROUP:
        expectations['sheet_commutator'] = PASS
    report.add_samples([results], expectations)
    report.summary = {
        'case': sheet.case.value,
        'lambda0': sheet.lambda0,
        'commutator': sheet.commutator,
        'proportionality_residual': sheet.proportionality_residual,
        'dirichlet_energy': sheet.dirichlet_energy,
    }
    return report


# ======
# Parser
# ======

def _parse_vector(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(',')]
    except ValueError as e:
        raise InputError(f"Cannot parse vector {text!r}") from e


def _parse_mu(text: str) -> List[List[float]]:
    """Covectors separated by ';', components by ','."""
    return [_parse_vector(part) for part in text.split(';')]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='polyred', description='Polyred - polysymplectic reduction toolkit')
    parser.add_argument('--config', '-c', default='config.yaml',
                        help='Path to configuration file (default: config.yaml)')
    parser.add_argument('--init', action='store_true', help='Write the default configuration file and exit')
    parser.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], default=None)
    parser.add_argument('command', nargs='?', choices=COMMANDS)
    parser.add_argument('--model', choices=MODELS)
    parser.add_argument('--samples', type=int)
    parser.add_argument('--seed', type=int)
    parser.add_argument('--mu', help="Momentum value, e.g. '0,0,1;1,0,0'")
    parser.add_argument('--pi1', help="First orbit covector, e.g. '0,0,1'")
    parser.add_argument('--pi2', help="Second orbit covector (overrides --lambda0)")
    parser.add_argument('--lambda0', type=float, help='Use pi2 = lambda0 * pi1')
    parser.add_argument('--dt', type=float)
    parser.add_argument('--t-end', type=float)
    parser.add_argument('--component', type=int)
    parser.add_argument('--grid', type=int, help='Harmonic sheet points per side')
    parser.add_argument('--tol-rank', type=float)
    parser.add_argument('--out', help='JSON report path (default: stdout)')
    parser.add_argument('--csv', help='CSV path for trajectories and sheets')
    return parser


def _apply_arguments(cfg: Config, args: argparse.Namespace) -> None:
    """CLI flags take precedence over the environment and the YAML file."""
    overrides = {
        'run.model': args.model,
        'run.samples': args.samples,
        'run.seed': args.seed,
        'dynamics.dt': args.dt,
        'dynamics.t_end': args.t_end,
        'dynamics.component': args.component,
        'dynamics.grid': args.grid,
        'tolerance.rank_rel': args.tol_rank,
        'output.json': args.out,
        'output.csv': args.csv,
        'logging.level': args.log_level,
    }
    for key, value in overrides.items():
        if value is not None:
            cfg.set(key, value)
    if args.mu is not None:
        cfg.set('models.mu', _parse_mu(args.mu))
        cfg.set('models.product_mu', [row[0] for row in _parse_mu(args.mu)])
    if args.pi1 is not None:
        cfg.set('models.pi1', _parse_vector(args.pi1))
    if args.lambda0 is not None:
        cfg.set('models.lambda0', args.lambda0)
        cfg.set('models.pi2', None)
    if args.pi2 is not None:
        cfg.set('models.pi2', _parse_vector(args.pi2))


def _setup_logging(cfg: Config) -> None:
    level = str(cfg.get('logging.level', 'INFO')).upper()
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    log_file = cfg.get('logging.file')
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def run_command(command: str, cfg: Config) -> Report:
    csv_path = cfg.get('output.csv') or None
    if command == 'counterexample':
        return cmd_counterexample(cfg)
    if command == 'verify':
        return cmd_verify(cfg)
    if command == 'kks':
        return cmd_kks(cfg)
    if command == 'integrate':
        return cmd_integrate(cfg, csv_path)
    return cmd_harmonic(cfg, csv_path)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        if args.init:
            cfg = Config(args.config)
            cfg.save()
            print(f"Configuration initialized at {args.config}")
            return EXIT_OK
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        cfg = Config(args.config)
        _apply_arguments(cfg, args)
        _setup_logging(cfg)
        report = run_command(args.command, cfg)
    except PolyredError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        return EXIT_USAGE

    out = cfg.get('output.json')
    try:
        if out:
            report.write(out)
        else:
            sys.stdout.write(report.to_json() + "\n")
    except OSError as e:
        logger.error(f"Cannot write report: {e}")
        return EXIT_USAGE
    return EXIT_OK if report.all_met else EXIT_CHECK_FAILED
