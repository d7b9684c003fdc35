"""
Polyred - Configuration
YAML settings with dot-notation access and environment overrides.
"""
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import yaml
from dotenv import load_dotenv

from internal.errors.errors import InputError
from internal.subspace.subspace import Tolerance

logger = logging.getLogger(__name__)

THREADS_ENV = 'POLYRED_THREADS'


class Config:
    """Configuration manager for Polyred."""

    def __init__(self, config_path: str = "config.yaml", env_file: Optional[str] = None):
        self.config_path = Path(config_path)
        self.config: Dict[str, Any] = {}
        self.thread_cap: Optional[int] = None
        load_dotenv(env_file)
        self.load()

    def load(self) -> None:
        """Load configuration from file, falling back to defaults when it does not exist."""
        defaults = self.get_default_config()
        if self.config_path.exists():
            try:
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    loaded = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise InputError(f"Cannot parse {self.config_path}: {e}") from e
            if not isinstance(loaded, dict):
                raise InputError(f"{self.config_path} must contain a mapping")
            self.config = _merge(defaults, loaded)
            logger.debug(f"Loaded configuration from {self.config_path}")
        else:
            self.config = defaults
        self._apply_environment()

    def save(self) -> None:
        """Save configuration to file."""
        with open(self.config_path, 'w', encoding='utf-8') as f:
            yaml.dump(self.config, f, default_flow_style=False)

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by key (supports dot notation)."""
        value = self.config
        for k in key.split('.'):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def set(self, key: str, value: Any) -> None:
        """Set configuration value by key (supports dot notation); call save() to persist."""
        keys = key.split('.')
        config = self.config
        for k in keys[:-1]:
            config = config.setdefault(k, {})
        config[keys[-1]] = value

    def get_float(self, key: str) -> float:
        """Numeric value at key; malformed entries raise InputError."""
        value = self.get(key)
        try:
            return float(value)
        except (TypeError, ValueError) as e:
            raise InputError(f"{key} must be a number, got {value!r}") from e

    def get_int(self, key: str) -> int:
        value = self.get(key)
        if isinstance(value, bool):
            raise InputError(f"{key} must be an integer, got {value!r}")
        try:
            number = float(value)
        except (TypeError, ValueError) as e:
            raise InputError(f"{key} must be an integer, got {value!r}") from e
        if not number.is_integer():
            raise InputError(f"{key} must be an integer, got {value!r}")
        return int(number)

    def get_array(self, key: str) -> np.ndarray:
        """Nested lists at key as a float array; ragged or non-numeric entries raise InputError."""
        value = self.get(key)
        try:
            array = np.asarray(value, dtype=float)
        except (TypeError, ValueError) as e:
            raise InputError(f"{key} must be a numeric array, got {value!r}") from e
        if array.ndim == 0:
            raise InputError(f"{key} must be a list of numbers, got {value!r}")
        if not np.all(np.isfinite(array)):
            raise InputError(f"{key} has non-finite entries: {value!r}")
        return array

    def tolerance(self) -> Tolerance:
        return Tolerance(rank_rel=self.get_float('tolerance.rank_rel'),
                         eq_abs=self.get_float('tolerance.eq_abs'))

    def max_workers(self) -> int:
        """Configured worker count, capped by POLYRED_THREADS when it is set."""
        workers = self.get_int('performance.max_workers')
        if workers < 1:
            raise InputError(f"performance.max_workers must be positive, got {workers}")
        if self.thread_cap is not None:
            workers = min(workers, self.thread_cap)
        return workers

    def _apply_environment(self) -> None:
        self.thread_cap = None
        threads = os.environ.get(THREADS_ENV)
        if not threads:
            return
        try:
            value = int(threads)
        except ValueError as e:
            raise InputError(f"{THREADS_ENV} must be an integer, got {threads!r}") from e
        if value < 1:
            raise InputError(f"{THREADS_ENV} must be positive, got {value}")
        self.thread_cap = value

    @staticmethod
    def get_default_config() -> Dict[str, Any]:
        """Get default configuration."""
        return {
            'run': {
                'seed': 0,
                'samples': 100,
                'model': 'group',  # group, covelocity, product, diagonal, failing
            },
            'tolerance': {
                'rank_rel': 1e-9,
                'eq_abs': 1e-9,
                'dependence': 1e-9,
            },
            'models': {
                'mu': [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
                'product_mu': [1.0, 0.5],
                'pi1': [1.0, 2.0, 3.0],
                'pi2': None,  # None: pi2 = lambda0 * pi1
                'lambda0': 2.0,
            },
            'dynamics': {
                'dt': 1e-3,
                't_end': 1.0,
                'component': 1,
                'metric': [1.0, 1.0, 1.0],  # diagonal of the inner product on so(3)
                'harmonic_inertia': [1.0, 2.0, 3.0],
                'grid': 20,
                'grid_extent': 1.0,
            },
            'performance': {
                'max_workers': 1,
            },
            'output': {
                'json': '',  # empty: print to stdout
                'csv': '',
            },
            'logging': {
                'level': 'INFO',  # DEBUG, INFO, WARNING, ERROR
                'file': '',
            },
        }


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged
