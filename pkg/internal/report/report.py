"""
Polyred - Reporting
Aggregated check records, deterministic JSON reports and CSV exports of
trajectories and harmonic sheets.
"""
import csv
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from internal.dynamics.dynamics import HarmonicSheet, Trajectory
from internal.errors.errors import InputError
from internal.models.models import GroupModelPoint, OrbitPoint
from internal.reduction.reduction import CheckResult, CheckStatus

logger = logging.getLogger(__name__)

AXES = "xyz"


@dataclass
class CheckRecord:
    """One check folded over every sample it ran on."""
    name: str
    status: CheckStatus
    expected: Optional[CheckStatus]
    lhs_dim: Optional[int]
    rhs_dim: Optional[int]
    residual: float
    samples: int
    passed: int

    @property
    def met(self) -> bool:
        return self.expected is None or self.status == self.expected

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'status': self.status.value,
            'expected': self.expected.value if self.expected else None,
            'lhs_dim': self.lhs_dim,
            'rhs_dim': self.rhs_dim,
            'residual': self.residual,
            'samples': self.samples,
            'passed': self.passed,
            'met': self.met,
        }


def aggregate(name: str, results: Sequence[CheckResult], expected: Optional[CheckStatus] = None) -> CheckRecord:
    """
    Folds per-sample results of one check in sample order. The status is FAIL
    when any sample fails, MEASURED when every sample is a measurement, PASS
    otherwise; dimensions are those of the first sample.
    """
    if not results:
        raise InputError(f"No results to aggregate for {name}")
    if any(r.name != name for r in results):
        raise InputError(f"Results for {name} mix check names")
    if any(r.status == CheckStatus.FAIL for r in results):
        status = CheckStatus.FAIL
    elif all(r.status == CheckStatus.MEASURED for r in results):
        status = CheckStatus.MEASURED
    else:
        status = CheckStatus.PASS
    record = CheckRecord(
        name=name,
        status=status,
        expected=expected,
        lhs_dim=results[0].lhs_dim,
        rhs_dim=results[0].rhs_dim,
        residual=max(float(r.residual) for r in results),
        samples=len(results),
        passed=sum(1 for r in results if r.status == CheckStatus.PASS),
    )
    if not record.met:
        logger.warning(f"{name}: {status.value} (expected {expected.value}), dims {record.lhs_dim} vs {record.rhs_dim}")
    return record


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


@dataclass
class Report:
    """Records of one CLI run plus summary values and run metadata."""
    command: str
    records: Dict[str, CheckRecord] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def add(self, record: CheckRecord) -> None:
        if record.name in self.records:
            raise InputError(f"Check {record.name} already reported")
        self.records[record.name] = record

    def add_samples(self, per_sample: Iterable[Sequence[CheckResult]],
                    expectations: Optional[Dict[str, CheckStatus]] = None) -> None:
        """Groups the results of every sample by check name, keeping first-seen order."""
        expectations = expectations or {}
        grouped: Dict[str, List[CheckResult]] = {}
        for results in per_sample:
            for result in results:
                grouped.setdefault(result.name, []).append(result)
        for name, results in grouped.items():
            self.add(aggregate(name, results, expectations.get(name, _default_expectation(name, expectations))))

    @property
    def all_met(self) -> bool:
        return all(record.met for record in self.records.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'checks': [record.to_dict() for record in self.records.values()],
            'summary': self.summary,
            'metadata': self.metadata,
            'all_met': self.all_met,
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True, allow_nan=False)

    def write(self, path: str) -> None:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.to_json())
            f.write("\n")
        logger.info(f"Report written to {path}")


def _default_expectation(name: str, expectations: Dict[str, CheckStatus]) -> Optional[CheckStatus]:
    """Expectations keyed by a prefix ending in '*' apply to indexed names like mw_cond_1[2]."""
    for key, status in expectations.items():
        if key.endswith('*') and name.startswith(key[:-1]):
            return status
    return None


def _fmt(x: float) -> str:
    return format(float(x), '.17g')


def component_names(k: int, d: int) -> List[str]:
    """nu1x, nu1y, ... for three-dimensional algebras, nu1_0, nu1_1, ... otherwise."""
    if d == 3:
        return [f"nu{A}{axis}" for A in range(1, k + 1) for axis in AXES]
    return [f"nu{A}_{i}" for A in range(1, k + 1) for i in range(d)]


def _state_columns(state) -> List[str]:
    if isinstance(state, GroupModelPoint):
        g = np.asarray(getattr(state.g, 'R', state.g), dtype=float)
        if g.ndim == 2:
            names = [f"g{i}{j}" for i in range(g.shape[0]) for j in range(g.shape[1])]
        else:
            names = [f"g{i}" for i in range(g.size)]
        return names + component_names(state.k, state.nus.shape[1])
    if isinstance(state, OrbitPoint):
        return component_names(state.k, state.nus.shape[1])
    return [f"x{i}" for i in range(np.asarray(state).size)]


def _state_values(state) -> np.ndarray:
    if isinstance(state, GroupModelPoint):
        g = np.asarray(getattr(state.g, 'R', state.g), dtype=float)
        return np.concatenate([g.reshape(-1), state.nus.reshape(-1)])
    if isinstance(state, OrbitPoint):
        return state.nus.reshape(-1)
    return np.asarray(state, dtype=float).reshape(-1)


def write_trajectory_csv(traj: Trajectory, path: str) -> None:
    """Header t, state columns, then the logged invariants (H, inv_11, inv_12, ...)."""
    if not traj.states:
        raise InputError("Empty trajectory")
    invariant_names = list(traj.invariant_log[0]) if traj.invariant_log else []
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['t'] + _state_columns(traj.states[0]) + invariant_names)
        for i, (t, state) in enumerate(zip(traj.times, traj.states)):
            row = [_fmt(t)] + [_fmt(v) for v in _state_values(state)]
            if invariant_names:
                row += [_fmt(traj.invariant_log[i][name]) for name in invariant_names]
            writer.writerow(row)
    logger.info(f"Trajectory with {len(traj.states)} states written to {path}")


def write_sheet_csv(sheet: HarmonicSheet, path: str) -> None:
    """One row per grid point: s, t, nu1x, ..., nu2z."""
    ns, nt, k, d = sheet.points.shape
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['s', 't'] + component_names(k, d))
        for i in range(ns):
            for j in range(nt):
                writer.writerow([_fmt(sheet.s_values[i]), _fmt(sheet.t_values[j])]
                                + [_fmt(v) for v in sheet.points[i, j].reshape(-1)])
    logger.info(f"Sheet of {ns}x{nt} points written to {path}")
