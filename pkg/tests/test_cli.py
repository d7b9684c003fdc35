"""
Polyred Test Suite - Command Line

Runs the commands end to end through main() with small sample counts.
"""
import csv
import json
import os
import tempfile
import unittest

from internal.cli.cli import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, main


class CLITestCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.config = os.path.join(self.tmp.name, 'config.yaml')

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def run_cli(self, *args, out='report.json'):
        code = main(['--config', self.config, '--log-level', 'WARNING', '--out', self.path(out), *args])
        data = None
        if os.path.exists(self.path(out)):
            with open(self.path(out), encoding='utf-8') as f:
                data = json.load(f)
        return code, data

    @staticmethod
    def check(data, name):
        return next(c for c in data['checks'] if c['name'] == name)


class TestCounterexample(CLITestCase):
    """Diagonal translation counterexample"""

    def test_report(self):
        """Test the counterexample report dimensions and verdicts"""
        code, data = self.run_cli('counterexample', '--samples', '5')
        self.assertEqual(code, EXIT_OK)
        claim = self.check(data, 'guenther_claim')
        self.assertEqual(claim['status'], 'fail')
        self.assertEqual(claim['expected'], 'fail')
        self.assertEqual((claim['lhs_dim'], claim['rhs_dim']), (1, 2))
        self.assertEqual(self.check(data, 'momentum_lemma_orbit')['status'], 'pass')
        self.assertEqual(self.check(data, 'product_group.reduced_polysymplectic')['status'], 'pass')
        self.assertEqual(data['summary']['orbit_dim'], 1)
        self.assertEqual(data['summary']['double_complement_dim'], 2)
        self.assertEqual(data['summary']['diagonal_reduced_dim'], 5)
        self.assertEqual(data['summary']['product_group_reduced_dim'], 4)
        self.assertTrue(data['all_met'])

    def test_reruns_are_byte_identical(self):
        """Test a fixed seed gives identical report bytes"""
        self.run_cli('counterexample', '--samples', '3', '--seed', '9', out='a.json')
        self.run_cli('counterexample', '--samples', '3', '--seed', '9', out='b.json')
        with open(self.path('a.json'), 'rb') as a, open(self.path('b.json'), 'rb') as b:
            self.assertEqual(a.read(), b.read())


class TestVerify(CLITestCase):
    """Per-model verification"""

    def test_group_model(self):
        """Test the group model reduces to dimension 3"""
        code, data = self.run_cli('verify', '--model', 'group', '--samples', '3')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(data['summary']['reduced_dim'], 3)
        self.assertEqual(self.check(data, 'orbit_agreement')['status'], 'pass')
        self.assertEqual(data['metadata']['model'], 'group')

    def test_dependent_momentum(self):
        """Test proportional momentum components give a 2-dimensional quotient"""
        code, data = self.run_cli('verify', '--model', 'group', '--samples', '3', '--mu', '0,0,1;0,0,2')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(data['summary']['reduced_dim'], 2)

    def test_product_and_covelocity(self):
        """Test the product and covelocity models meet every expectation"""
        for model in ('product', 'covelocity'):
            code, _ = self.run_cli('verify', '--model', model, '--samples', '3')
            self.assertEqual(code, EXIT_OK, model)

    def test_failing_model(self):
        """Test the diagonal model exits with a failed check"""
        code, data = self.run_cli('verify', '--model', 'failing', '--samples', '3')
        self.assertEqual(code, EXIT_CHECK_FAILED)
        self.assertFalse(data['all_met'])
        self.assertEqual(self.check(data, 'mw_cond_2')['status'], 'fail')


class TestKKS(CLITestCase):
    """Orbit classification"""

    def test_sphere(self):
        """Test proportional covectors give the sphere case"""
        code, data = self.run_cli('kks', '--samples', '10')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(data['summary']['case'], 2)
        self.assertEqual(data['summary']['lambda0'], 2.0)
        self.assertEqual(self.check(data, 'kks_sphere')['status'], 'pass')

    def test_rotation_group(self):
        """Test independent covectors give the rotation group case"""
        code, data = self.run_cli('kks', '--samples', '10', '--pi1', '1,2,3', '--pi2', '0,1,0')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(data['summary']['case'], 3)
        self.assertEqual(data['summary']['identity_values']['1'], [-3.0, -1.0, -2.0])
        self.assertEqual(self.check(data, 'kks_group_form')['status'], 'pass')

    def test_point(self):
        """Test zero covectors give the point case"""
        code, data = self.run_cli('kks', '--pi1', '0,0,0', '--pi2', '0,0,0')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(data['summary']['case'], 1)


class TestDynamicsCommands(CLITestCase):
    """integrate and harmonic"""

    def test_integrate(self):
        """Test integrate writes the report and the trajectory CSV"""
        code, data = self.run_cli('integrate', '--dt', '0.01', '--t-end', '0.5', '--csv', self.path('traj.csv'))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(data['summary']['steps'], 50)
        self.assertEqual(self.check(data, 'commutation')['status'], 'pass')
        with open(self.path('traj.csv'), newline='', encoding='utf-8') as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0][:2], ['t', 'nu1x'])
        self.assertEqual(len(rows), 52)

    def test_harmonic(self):
        """Test the harmonic sheet for a proportional pair"""
        code, data = self.run_cli('harmonic', '--grid', '3', '--dt', '0.001', '--csv', self.path('sheet.csv'))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(self.check(data, 'proportionality')['status'], 'pass')
        self.assertEqual(self.check(data, 'sheet_commutator')['status'], 'pass')
        self.assertTrue(os.path.exists(self.path('sheet.csv')))

    def test_harmonic_independent_pair_is_measured(self):
        """Test independent pairs only measure the commutator"""
        code, data = self.run_cli('harmonic', '--grid', '2', '--dt', '0.01', '--pi2', '0,1,0')
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(self.check(data, 'sheet_commutator')['status'], 'measured')


class TestUsage(CLITestCase):
    """Exit codes for usage and input errors"""

    def test_init(self):
        """Test --init writes the default configuration"""
        self.assertEqual(main(['--config', self.config, '--init']), EXIT_OK)
        self.assertTrue(os.path.exists(self.config))

    def test_missing_command(self):
        """Test a missing command is a usage error"""
        self.assertEqual(main(['--config', self.config]), EXIT_USAGE)

    def test_unknown_command(self):
        """Test an unknown command is a usage error"""
        self.assertEqual(main(['--config', self.config, 'reduce']), EXIT_USAGE)

    def test_bad_vector(self):
        """Test an unparsable vector flag is a usage error"""
        code, data = self.run_cli('kks', '--pi1', 'a,b,c')
        self.assertEqual(code, EXIT_USAGE)
        self.assertIsNone(data)

    def test_bad_samples(self):
        """Test a zero sample count is a usage error"""
        code, _ = self.run_cli('verify', '--samples', '0')
        self.assertEqual(code, EXIT_USAGE)

    def test_bad_dt(self):
        """Test a negative step is a usage error"""
        code, _ = self.run_cli('integrate', '--dt', '-1')
        self.assertEqual(code, EXIT_USAGE)

    def write_config(self, text):
        with open(self.config, 'w', encoding='utf-8') as f:
            f.write(text)

    def test_malformed_number_in_config(self):
        """Test a non-numeric config value exits with a usage error"""
        self.write_config("dynamics:\n  dt: fast\n")
        code, data = self.run_cli('integrate')
        self.assertEqual(code, EXIT_USAGE)
        self.assertIsNone(data)

    def test_ragged_momentum_in_config(self):
        """Test a ragged momentum value exits with a usage error"""
        self.write_config("models:\n  mu: [[0, 0, 1], [1, 0]]\n")
        code, data = self.run_cli('verify', '--model', 'group', '--samples', '2')
        self.assertEqual(code, EXIT_USAGE)
        self.assertIsNone(data)

    def test_malformed_values_for_each_command(self):
        """Test malformed seeds, grids and covectors exit with a usage error"""
        cases = [
            ("run:\n  seed: abc\n", ('counterexample', '--samples', '2')),
            ("run:\n  samples: many\n", ('verify',)),
            ("dynamics:\n  grid: 2.5\n", ('harmonic',)),
            ("models:\n  pi1: [1, x, 3]\n", ('kks',)),
            ("models:\n  lambda0: twice\n", ('kks',)),
            ("tolerance:\n  rank_rel: null\n", ('kks',)),
            ("models:\n  product_mu: [1, [2]]\n", ('counterexample', '--samples', '2')),
        ]
        for text, args in cases:
            self.write_config(text)
            code, _ = self.run_cli(*args)
            self.assertEqual(code, EXIT_USAGE, text)


if __name__ == '__main__':
    unittest.main()
