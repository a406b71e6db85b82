"""Tests for the angular-distance kernels."""
import math

import numpy as np
import pytest

from hdlss.angular_core import (
    AnchorPool,
    rho0_scalar,
    rho0_vec,
    rho_bar_hat,
    rho_bar_hat_matrix,
    rho_hat,
    rho_hat_matrix,
    safe_acos,
    sign_count_matrix,
)
from hdlss.errors import DimensionMismatchError, InsufficientSampleError


class TestSafeAcos:
    """acos with clamping."""

    def test_identity(self) -> None:
        """acos(1) is 0."""
        assert safe_acos(1.0) == 0.0

    def test_clamps_above_one(self) -> None:
        """Round-off above 1 is clamped instead of raising."""
        assert safe_acos(1.0 + 1e-15) == 0.0
        assert safe_acos(-1.0 - 1e-15) == pytest.approx(math.pi)

    def test_orthogonal(self) -> None:
        """acos(0) is pi/2."""
        assert safe_acos(0.0) == pytest.approx(math.pi / 2)


class TestRho0Vec:
    """Angle at an anchor, scaled to [0, 1]."""

    def test_orthogonal_vectors(self) -> None:
        """Orthogonal offsets give one half."""
        assert rho0_vec([1, 0], [0, 1], [0, 0]) == pytest.approx(0.5)

    def test_anchor_collision_is_zero(self) -> None:
        """u equal to the anchor takes the zero branch."""
        assert rho0_vec([3, 3], [1, 2], [3, 3]) == 0.0
        assert rho0_vec([1, 2], [3, 3], [3, 3]) == 0.0

    def test_antipodal_vectors(self) -> None:
        """Opposite offsets give one."""
        assert rho0_vec([1, 1], [-1, -1], [0, 0]) == pytest.approx(1.0)

    def test_dimension_mismatch(self) -> None:
        """Vectors of different lengths are rejected."""
        with pytest.raises(DimensionMismatchError):
            rho0_vec([1, 2], [1, 2, 3], [0, 0])

    def test_symmetric_and_bounded(self, rng) -> None:
        """rho0(u, v; w) == rho0(v, u; w) and lies in [0, 1]."""
        for _ in range(200):
            u, v, w = rng.normal(size=(3, 4))
            value = rho0_vec(u, v, w)
            assert value == rho0_vec(v, u, w)
            assert 0.0 <= value <= 1.0

    def test_scale_invariance(self, rng) -> None:
        """Stretching u - w and v - w by positive factors keeps the angle."""
        for _ in range(100):
            u, v, w = rng.normal(size=(3, 6))
            a, b = rng.uniform(0.1, 10.0, size=2)
            stretched = rho0_vec(w + a * (u - w), w + b * (v - w), w)
            assert stretched == pytest.approx(rho0_vec(u, v, w), abs=1e-12)

    def test_one_dimensional_matches_scalar(self, rng) -> None:
        """On 1-vectors the angle is 0 or pi and agrees with the sign test."""
        triples = rng.integers(-3, 4, size=(2000, 3)).astype(float)
        for a, b, c in triples:
            assert rho0_vec([a], [b], [c]) == rho0_scalar(a, b, c)


class TestRho0Scalar:
    """Sign-test form of rho0 in one dimension."""

    def test_opposite_sides(self) -> None:
        """2 and 5 straddle 3."""
        assert rho0_scalar(2, 5, 3) == 1.0

    def test_same_side(self) -> None:
        """2 and 5 both lie above 1."""
        assert rho0_scalar(2, 5, 1) == 0.0

    def test_collision(self) -> None:
        """a equal to c is the zero branch."""
        assert rho0_scalar(2, 5, 2) == 0.0


class TestRhoHat:
    """Pooled vector-level estimator."""

    def test_two_anchor_hand_example(self) -> None:
        """Both anchors see u and v at 45 degrees."""
        pool = AnchorPool(np.array([[0.0, 0.0]]), np.array([[2.0, 0.0]]))
        assert rho_hat([0, 2], [2, 2], pool) == pytest.approx(0.25)

    def test_equal_points(self, rng) -> None:
        """rho_hat(u, u) is 0 for any pool."""
        pool = AnchorPool(rng.normal(size=(3, 4)), rng.normal(size=(4, 4)))
        u = rng.normal(size=4)
        assert rho_hat(u, u, pool) == 0.0

    def test_one_dimensional_pool(self) -> None:
        """0.5 and 1.5 lie on one side of both anchors 0 and 2."""
        pool = AnchorPool(np.array([[0.0]]), np.array([[2.0]]))
        assert rho_hat([0.5], [1.5], pool) == 0.0

    def test_one_dimensional_separating_anchor(self) -> None:
        """Anchor 2 separates 0.5 from 2.5, anchor 0 does not."""
        pool = AnchorPool(np.array([[0.0]]), np.array([[2.0]]))
        assert rho_hat([0.5], [2.5], pool) == pytest.approx(0.5)
        assert rho_bar_hat([0.5], [2.5], pool) == 0.5

    def test_empty_pool(self) -> None:
        """A class without anchors is rejected."""
        with pytest.raises(InsufficientSampleError):
            AnchorPool(np.empty((0, 2)), np.zeros((1, 2)))


class TestRhoBarHat:
    """Coordinatewise estimator."""

    def test_hand_examples(self) -> None:
        """Anchors {0, 2, 1, 3} around the pairs (0, 2) and (0, 3)."""
        pool = AnchorPool(np.array([[0.0], [2.0]]), np.array([[1.0], [3.0]]))
        assert rho_bar_hat([0], [2], pool) == 0.25
        assert rho_bar_hat([0], [3], pool) == 0.5

    def test_equals_rho_hat_in_one_dimension(self, rng) -> None:
        """The two estimators coincide when d = 1."""
        pool = AnchorPool(rng.normal(size=(5, 1)), rng.normal(size=(6, 1)))
        for _ in range(50):
            u, v = rng.normal(size=(2, 1))
            assert rho_bar_hat(u, v, pool) == rho_hat(u, v, pool)

    def test_symmetric_and_bounded(self, rng) -> None:
        """Symmetric in (u, v) with values in [0, 1]."""
        pool = AnchorPool(rng.normal(size=(4, 7)), rng.normal(size=(3, 7)))
        for _ in range(50):
            u, v = rng.normal(size=(2, 7))
            value = rho_bar_hat(u, v, pool)
            assert value == rho_bar_hat(v, u, pool)
            assert 0.0 <= value <= 1.0

    def test_brute_force_slices(self, rng) -> None:
        """Summing rho0_vec over 1-D slices reproduces the count exactly."""
        X = rng.integers(-2, 3, size=(3, 4)).astype(float)
        Y = rng.integers(-2, 3, size=(3, 4)).astype(float)
        pool = AnchorPool(X, Y)
        W = pool.anchors
        for _ in range(30):
            u, v = rng.integers(-2, 3, size=(2, 4)).astype(float)
            total = sum(
                rho0_vec([u[k]], [v[k]], [w[k]]) for w in W for k in range(4)
            )
            assert total / (W.shape[0] * 4) == rho_bar_hat(u, v, pool)


class TestMatrixKernels:
    """Pairwise kernels against the scalar reference."""

    def test_sign_counts_match_scalar(self, rng) -> None:
        """Tied integer data exercises every collision branch."""
        A = rng.integers(-3, 4, size=(6, 5)).astype(float)
        B = rng.integers(-3, 4, size=(4, 5)).astype(float)
        W = rng.integers(-3, 4, size=(7, 5)).astype(float)
        pool = AnchorPool(W[:3], W[3:])
        M = rho_bar_hat_matrix(A, B, W)
        for i in range(A.shape[0]):
            for j in range(B.shape[0]):
                assert M[i, j] == rho_bar_hat(A[i], B[j], pool)
        assert sign_count_matrix(A, B, W).dtype == np.int64

    def test_rho_hat_matrix_matches_scalar(self, rng) -> None:
        """Gram-based angles agree with the direct computation."""
        A = rng.normal(size=(5, 8))
        B = rng.normal(size=(4, 8))
        X, Y = rng.normal(size=(3, 8)), rng.normal(size=(3, 8))
        # collisions with anchors and between A and B
        A[0] = X[1]
        B[2] = A[3]
        pool = AnchorPool(X, Y)
        M = rho_hat_matrix(A, B, pool.anchors)
        for i in range(A.shape[0]):
            for j in range(B.shape[0]):
                assert M[i, j] == pytest.approx(rho_hat(A[i], B[j], pool), abs=1e-9)
        assert M[3, 2] == 0.0

    def test_rho_hat_matrix_one_dimensional(self, rng) -> None:
        """d = 1 goes through the exact sign-count path."""
        A = rng.normal(size=(4, 1))
        W = rng.normal(size=(6, 1))
        np.testing.assert_array_equal(rho_hat_matrix(A, A, W), rho_bar_hat_matrix(A, A, W))

    def test_dimension_mismatch(self, rng) -> None:
        """Anchor dimension must match both operands."""
        with pytest.raises(DimensionMismatchError):
            sign_count_matrix(rng.normal(size=(2, 3)), rng.normal(size=(2, 4)), rng.normal(size=(3, 3)))
