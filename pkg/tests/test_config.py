"""
Polyred Test Suite - Configuration
"""
import os
import tempfile
import unittest
from unittest import mock

import yaml

from internal.config.config import THREADS_ENV, Config
from internal.errors.errors import InputError


class TestConfiguration(unittest.TestCase):
    """Test configuration management"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'config.yaml')
        self.env = mock.patch.dict(os.environ, {}, clear=False)
        self.env.start()
        os.environ.pop(THREADS_ENV, None)

    def tearDown(self):
        self.env.stop()
        self.tmp.cleanup()

    def _write(self, text):
        with open(self.path, 'w', encoding='utf-8') as f:
            f.write(text)

    def test_defaults_without_file(self):
        """Test a missing file yields defaults and is not created"""
        config = Config(self.path)
        self.assertEqual(config.get('run.samples'), 100)
        self.assertEqual(config.get('models.lambda0'), 2.0)
        self.assertIsNone(config.get('models.pi2'))
        self.assertEqual(config.get('missing.key', 'fallback'), 'fallback')
        self.assertFalse(os.path.exists(self.path))

    def test_file_overrides_defaults(self):
        """Test partial files merge into the defaults"""
        self._write("run:\n  samples: 7\ntolerance:\n  rank_rel: 1.0e-8\n")
        config = Config(self.path)
        self.assertEqual(config.get('run.samples'), 7)
        self.assertEqual(config.get('run.seed'), 0)
        tol = config.tolerance()
        self.assertEqual(tol.rank_rel, 1e-8)
        self.assertEqual(tol.eq_abs, 1e-9)

    def test_set_and_save(self):
        """Test set does not persist until save"""
        config = Config(self.path)
        config.set('run.seed', 42)
        self.assertEqual(config.get('run.seed'), 42)
        self.assertFalse(os.path.exists(self.path))
        config.save()
        with open(self.path, encoding='utf-8') as f:
            self.assertEqual(yaml.safe_load(f)['run']['seed'], 42)
        self.assertEqual(Config(self.path).get('run.seed'), 42)

    def test_bad_yaml(self):
        """Test unparsable YAML raises InputError"""
        self._write("run: [unclosed\n")
        with self.assertRaises(InputError):
            Config(self.path)

    def test_non_mapping(self):
        """Test a top-level list raises InputError"""
        self._write("- 1\n- 2\n")
        with self.assertRaises(InputError):
            Config(self.path)

    def test_threads_from_environment(self):
        """Test POLYRED_THREADS caps the configured workers"""
        self._write("performance:\n  max_workers: 8\n")
        os.environ[THREADS_ENV] = '4'
        self.assertEqual(Config(self.path).max_workers(), 4)
        os.environ[THREADS_ENV] = '16'
        self.assertEqual(Config(self.path).max_workers(), 8)

    def test_threads_never_raise_the_worker_count(self):
        """Test the cap leaves a smaller configured count alone"""
        os.environ[THREADS_ENV] = '4'
        config = Config(self.path)
        self.assertEqual(config.max_workers(), 1)
        self.assertEqual(config.get('performance.max_workers'), 1)

    def test_typed_getters(self):
        """Test numeric getters convert valid values and reject malformed ones"""
        self._write("dynamics:\n  dt: '1e-2'\n  grid: 4.0\n  metric: [1, 2, 3]\n"
                    "models:\n  mu: [[0, 0, 1], [1, 0]]\n  pi1: [1, x, 3]\n  pi2: [1, null, 3]\n")
        config = Config(self.path)
        self.assertEqual(config.get_float('dynamics.dt'), 0.01)
        self.assertEqual(config.get_int('dynamics.grid'), 4)
        self.assertEqual(config.get_array('dynamics.metric').tolist(), [1.0, 2.0, 3.0])
        for key in ('models.mu', 'models.pi1', 'models.pi2', 'run.seed', 'missing.key'):
            with self.assertRaises(InputError, msg=key):
                config.get_array(key)
        config.set('dynamics.grid', 2.5)
        for getter, key in ((config.get_int, 'dynamics.grid'), (config.get_int, 'run.model'),
                            (config.get_float, 'run.model'), (config.get_float, 'missing.key')):
            with self.assertRaises(InputError, msg=key):
                getter(key)

    def test_bad_threads(self):
        """Test non-positive or non-numeric POLYRED_THREADS"""
        for value in ('zero', '0'):
            os.environ[THREADS_ENV] = value
            with self.assertRaises(InputError):
                Config(self.path)

    def test_bad_max_workers(self):
        """Test a zero worker count is rejected"""
        self._write("performance:\n  max_workers: 0\n")
        with self.assertRaises(InputError):
            Config(self.path).max_workers()


if __name__ == '__main__':
    unittest.main()
