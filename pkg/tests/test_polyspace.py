"""
Polyred Test Suite - Polysymplectic Vector Spaces
"""
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from internal.errors.errors import DimensionError, InputError
from internal.polyspace.polyspace import (
    FormFamily,
    PolySymplecticSpace,
    canonical_forms,
    common_kernel,
    flat,
    flat_matrix,
    is_nondegenerate,
    k_orthogonal,
    quotient_form,
    random_polysymplectic,
    restrict_family,
    restrict_form,
    sharp_injectivity,
    verify_polysymplectic,
)
from internal.subspace.subspace import Subspace, contains, full, orthonormal_basis, subspace_equal, zero


class TestFormFamily(unittest.TestCase):
    """Test form validation"""

    def test_rejects_non_skew(self):
        """Test non-skew matrices are rejected"""
        with self.assertRaises(InputError):
            FormFamily((np.eye(2),))

    def test_rejects_non_finite(self):
        """Test non-finite entries are rejected"""
        om = np.array([[0.0, np.inf], [-np.inf, 0.0]])
        with self.assertRaises(InputError):
            FormFamily((om,))

    def test_rejects_mixed_shapes(self):
        """Test mixed form shapes are rejected"""
        with self.assertRaises(DimensionError):
            FormFamily((np.zeros((2, 2)), np.zeros((3, 3))))

    def test_evaluate(self):
        """Test form evaluation"""
        forms = canonical_forms(1, 2)
        e = np.eye(3)
        self.assertEqual(forms.evaluate(1, e[0], e[1]), 1.0)
        self.assertEqual(forms.evaluate(1, e[1], e[0]), -1.0)
        self.assertEqual(forms.evaluate(2, e[0], e[1]), 0.0)
        self.assertEqual(forms.evaluate(2, e[0], e[2]), 1.0)

    def test_transform_preserves_skewness(self):
        """Test pullbacks stay skew"""
        forms, P = random_polysymplectic(np.random.default_rng(3), m=2, k=2)
        for om in forms.omegas:
            self.assertEqual(np.max(np.abs(om + om.T)), 0.0)
        self.assertLess(np.linalg.cond(P), 1e2)


class TestCanonicalModel(unittest.TestCase):
    """Test the canonical covelocity family"""

    def setUp(self):
        self.forms = canonical_forms(1, 2)

    def test_polysymplectic_but_not_symplectic(self):
        """Test a degenerate pair with trivial common kernel"""
        self.assertTrue(verify_polysymplectic(self.forms))
        self.assertEqual(common_kernel(self.forms).r, 0)
        self.assertFalse(is_nondegenerate(self.forms.omegas[0]))
        self.assertTrue(sharp_injectivity(self.forms))
        PolySymplecticSpace(self.forms)

    def test_degenerate_family_rejected(self):
        """Test families with a common kernel are rejected"""
        with self.assertRaises(InputError):
            PolySymplecticSpace(FormFamily((self.forms.omegas[0],)))

    def test_double_complement_grows(self):
        """W = the p^1 axis: the double 2-orthogonal is 2-dimensional"""
        W = orthonormal_basis(np.eye(3)[1])
        once = k_orthogonal(W, self.forms)
        twice = k_orthogonal(once, self.forms)
        self.assertEqual(once.r, 2)
        self.assertEqual(twice.r, 2)
        self.assertTrue(contains(twice, W))
        self.assertFalse(subspace_equal(twice, W))

    def test_k_orthogonal_extremes(self):
        """Test k-orthogonals of the zero and full subspaces"""
        self.assertEqual(k_orthogonal(zero(3), self.forms).r, 3)
        self.assertEqual(k_orthogonal(full(3), self.forms).r, 0)

    def test_flat(self):
        """Test the flat map against its matrix"""
        e = np.eye(3)
        covector = flat([e[1], e[2]], self.forms)
        # i_{e_p1} omega^1 + i_{e_p2} omega^2 = -2 dq
        np.testing.assert_allclose(covector, [-2.0, 0.0, 0.0])
        self.assertEqual(flat_matrix(self.forms).shape, (3, 6))
        with self.assertRaises(DimensionError):
            flat([e[0]], self.forms)

    def test_restrict_form(self):
        """Test restriction to a subspace"""
        W = Subspace(3, np.eye(3)[:, :2])
        np.testing.assert_allclose(restrict_form(self.forms.omegas[0], W), [[0.0, 1.0], [-1.0, 0.0]], atol=1e-15)
        restricted = restrict_family(self.forms, W)
        self.assertEqual(restricted.n, 2)
        np.testing.assert_allclose(restricted.omegas[1], np.zeros((2, 2)), atol=1e-15)

    def test_quotient_form(self):
        """Test the quotient form is nondegenerate"""
        K, C, om = quotient_form(self.forms.omegas[0])
        self.assertEqual(K.r, 1)
        self.assertTrue(subspace_equal(K, orthonormal_basis(np.eye(3)[2])))
        self.assertEqual(C.r, 2)
        self.assertTrue(is_nondegenerate(om))


class TestSymplecticDoubleComplement(unittest.TestCase):
    """For k = 1 double complementation returns the subspace"""

    def test_random_subspaces(self):
        """Test k-orthogonal dimensions on random subspaces"""
        rng = np.random.default_rng(11)
        for _ in range(100):
            forms, _ = random_polysymplectic(rng, m=2, k=1)
            r = int(rng.integers(1, forms.n))
            W = orthonormal_basis(rng.standard_normal((forms.n, r)))
            twice = k_orthogonal(k_orthogonal(W, forms), forms)
            self.assertTrue(subspace_equal(twice, W))


class TestProperties(unittest.TestCase):
    """Property tests on random polysymplectic families"""

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), m=st.integers(1, 2), k=st.integers(1, 3))
    def test_pullbacks_stay_polysymplectic(self, seed, m, k):
        """Test random pullbacks stay polysymplectic"""
        forms, _ = random_polysymplectic(np.random.default_rng(seed), m=m, k=k)
        self.assertEqual(forms.n, m * (k + 1))
        self.assertTrue(verify_polysymplectic(forms))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_k_orthogonal_contains_double(self, seed):
        """W ⊆ (W^{⊥,k})^{⊥,k}"""
        rng = np.random.default_rng(seed)
        forms, _ = random_polysymplectic(rng, m=1, k=2)
        W = orthonormal_basis(rng.standard_normal((3, 1)))
        self.assertTrue(contains(k_orthogonal(k_orthogonal(W, forms), forms), W))


if __name__ == '__main__':
    unittest.main()
