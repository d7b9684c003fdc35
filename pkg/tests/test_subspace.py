"""
Polyred Test Suite - Subspace Arithmetic
"""
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from internal.errors.errors import DimensionError, InputError, PreconditionError
from internal.subspace.subspace import (
    Subspace,
    Tolerance,
    complement_in,
    contains,
    full,
    image,
    intersect,
    kernel,
    largest_angle,
    orthonormal_basis,
    span_of,
    subspace_equal,
    subspace_sum,
    zero,
)

E = np.eye(3)


class TestTolerance(unittest.TestCase):
    """Test tolerance validation"""

    def test_defaults(self):
        """Test default tolerances"""
        tol = Tolerance()
        self.assertEqual(tol.rank_rel, 1e-9)
        self.assertEqual(tol.eq_abs, 1e-9)

    def test_non_positive_rejected(self):
        """Test non-positive tolerances are rejected"""
        with self.assertRaises(InputError):
            Tolerance(rank_rel=0.0)
        with self.assertRaises(InputError):
            Tolerance(eq_abs=-1.0)


class TestSubspace(unittest.TestCase):
    """Test the Subspace value type"""

    def test_non_orthonormal_basis_rejected(self):
        """Test non-orthonormal bases are rejected"""
        with self.assertRaises(InputError):
            Subspace(3, np.array([[1.0], [1.0], [0.0]]))

    def test_row_mismatch_rejected(self):
        """Test basis row counts are checked"""
        with self.assertRaises(DimensionError):
            Subspace(3, np.eye(2))

    def test_basis_is_read_only(self):
        """Test bases are read-only"""
        U = full(3)
        with self.assertRaises(ValueError):
            U.basis[0, 0] = 2.0

    def test_zero_and_full(self):
        """Test the zero and full subspaces"""
        self.assertEqual(zero(4).r, 0)
        self.assertEqual(full(4).r, 4)
        self.assertEqual(zero(0).r, 0)


class TestOperations(unittest.TestCase):
    """Test rank, kernel, intersection and sums"""

    def test_orthonormal_basis_rank(self):
        """Test rank of the column span"""
        U = orthonormal_basis(np.column_stack([E[0], E[1], E[0] + E[1]]))
        self.assertEqual(U.r, 2)
        self.assertEqual(orthonormal_basis(np.zeros((3, 2))).r, 0)

    def test_rank_uses_relative_threshold(self):
        """Test the relative rank threshold"""
        cols = np.column_stack([E[0], 1e-12 * E[1]])
        self.assertEqual(orthonormal_basis(cols).r, 1)
        self.assertEqual(orthonormal_basis(cols, Tolerance(rank_rel=1e-14)).r, 2)

    def test_non_finite_rejected(self):
        """Test non-finite columns are rejected"""
        with self.assertRaises(InputError):
            orthonormal_basis(np.array([[np.nan], [0.0]]))

    def test_kernel(self):
        """Test kernels"""
        K = kernel(np.array([[1.0, 0.0, 0.0]]))
        self.assertEqual(K.r, 2)
        self.assertTrue(subspace_equal(K, orthonormal_basis(np.column_stack([E[1], E[2]]))))
        self.assertEqual(kernel(np.zeros((2, 3))).r, 3)

    def test_intersect_and_sum(self):
        """Test intersection and sum of coordinate planes"""
        U = orthonormal_basis(np.column_stack([E[0], E[1]]))
        V = orthonormal_basis(np.column_stack([E[1], E[2]]))
        W = intersect(U, V)
        self.assertTrue(subspace_equal(W, orthonormal_basis(E[1])))
        self.assertEqual(subspace_sum(U, V).r, 3)
        self.assertEqual(span_of(U, V, zero(3)).r, 3)

    def test_ambient_mismatch(self):
        """Test ambient dimensions are checked"""
        with self.assertRaises(DimensionError):
            intersect(full(2), full(3))

    def test_contains(self):
        """Test containment"""
        U = orthonormal_basis(np.column_stack([E[0], E[1]]))
        self.assertTrue(contains(U, orthonormal_basis(E[0] + E[1])))
        self.assertFalse(contains(U, orthonormal_basis(E[2])))
        self.assertTrue(contains(U, zero(3)))

    def test_equality_tolerates_tiny_tilts(self):
        """Test span{e1 + 1e-12 e2} equals span{e1} while a 1e-6 tilt does not"""
        line = orthonormal_basis(E[0])
        self.assertTrue(subspace_equal(orthonormal_basis(E[0] + 1e-12 * E[1]), line))
        self.assertFalse(subspace_equal(orthonormal_basis(E[0] + 1e-6 * E[1]), line))
        self.assertFalse(subspace_equal(line, orthonormal_basis(np.column_stack([E[0], E[1]]))))

    def test_largest_angle(self):
        """Test principal angles"""
        self.assertAlmostEqual(largest_angle(zero(3), orthonormal_basis(E[0])), np.pi / 2)
        self.assertEqual(largest_angle(zero(3), zero(3)), 0.0)
        self.assertAlmostEqual(largest_angle(orthonormal_basis(E[0]), orthonormal_basis(E[1])), np.pi / 2)

    def test_complement_in(self):
        """Test complements inside a subspace"""
        U = full(3)
        W = orthonormal_basis(E[0] + E[1])
        C = complement_in(W, U)
        self.assertEqual(C.r, 2)
        self.assertLess(np.max(np.abs(W.basis.T @ C.basis)), 1e-12)
        self.assertTrue(subspace_equal(subspace_sum(W, C), U))

    def test_complement_requires_containment(self):
        """Test complement_in needs containment"""
        with self.assertRaises(PreconditionError):
            complement_in(orthonormal_basis(E[2]), orthonormal_basis(E[0]))

    def test_image(self):
        """Test images under linear maps"""
        P = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        self.assertEqual(image(P, full(3)).r, 1)
        self.assertEqual(image(P, zero(3)).ambient_dim, 2)
        self.assertEqual(image(P, orthonormal_basis(E[1])).r, 0)


class TestProperties(unittest.TestCase):
    """Property tests on generic subspaces"""

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 6), data=st.data())
    def test_dimension_formula(self, seed, n, data):
        """dim U + dim V = dim(U + V) + dim(U ∩ V)"""
        r1 = data.draw(st.integers(0, n))
        r2 = data.draw(st.integers(0, n))
        rng = np.random.default_rng(seed)
        U = orthonormal_basis(rng.standard_normal((n, r1))) if r1 else zero(n)
        V = orthonormal_basis(rng.standard_normal((n, r2))) if r2 else zero(n)
        self.assertEqual(U.r + V.r, subspace_sum(U, V).r + intersect(U, V).r)
        self.assertEqual(intersect(U, V).r, max(0, r1 + r2 - n))

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 6))
    def test_intersection_is_contained_in_both(self, seed, n):
        """Test random intersections lie in both spaces"""
        rng = np.random.default_rng(seed)
        U = orthonormal_basis(rng.standard_normal((n, rng.integers(1, n + 1))))
        V = orthonormal_basis(np.hstack([U.basis[:, :1], rng.standard_normal((n, rng.integers(0, n)))]))
        W = intersect(U, V)
        self.assertGreaterEqual(W.r, 1)
        self.assertTrue(contains(U, W))
        self.assertTrue(contains(V, W))

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 6), data=st.data())
    def test_orthogonal_covariance(self, seed, n, data):
        """Test rotating every input rotates intersect, sum and complement_in alike"""
        rng = np.random.default_rng(seed)
        r1 = data.draw(st.integers(1, n))
        r2 = data.draw(st.integers(0, n - 1))
        U = orthonormal_basis(rng.standard_normal((n, r1)))
        V = orthonormal_basis(np.hstack([U.basis[:, :1], rng.standard_normal((n, r2))]))
        W = orthonormal_basis(U.basis @ rng.standard_normal((r1, data.draw(st.integers(1, r1)))))
        R = ortho_group.rvs(n, random_state=rng)

        def rotated(S):
            return Subspace(n, R @ S.basis)

        pairs = [
            (intersect(rotated(U), rotated(V)), intersect(U, V)),
            (subspace_sum(rotated(U), rotated(V)), subspace_sum(U, V)),
            (complement_in(rotated(W), rotated(U)), complement_in(W, U)),
        ]
        for moved, original in pairs:
            self.assertTrue(subspace_equal(moved, rotated(original)))


if __name__ == '__main__':
    unittest.main()
