# Tests for sparsity losses and orthogonal-group geometry
# Verifies loss values, gradients, the Riemannian gradient and the QR retraction

import numpy as np
import pytest

from src.errors import ConvergenceError, InvalidInputError
from src.manifold import (
    euclidean_gradient,
    loss_eps,
    loss_half_two,
    qr_retraction,
    riemannian_gradient,
    span_basis,
)
from src.manifold.loss import batch_loss_eps, batch_loss_half_two
from src.manifold.riemannian import ensure_special, orthogonality_defect, tangency_residual
from src.models import LossConfig, Normalization
from src.testgen import haar_rotation


def random_symmetric(n: int, d: int, seed: int) -> np.ndarray:
    A = np.random.default_rng(seed).standard_normal((n, d, d))
    return 0.5 * (A + np.swapaxes(A, 1, 2))


OFF_DIAGONAL = LossConfig(epsilon=1e-8, include_diagonal=False, normalization=Normalization.MEAN_OVER_N)


class TestLossValues:
    """Tests for the smoothed loss and the l_{1/2,2} selector."""

    def test_zero_matrix_off_diagonal(self):
        assert loss_eps(np.eye(2), np.zeros((1, 2, 2)), OFF_DIAGONAL) == pytest.approx(2e-4)

    def test_zero_matrix_with_diagonal(self):
        cfg = LossConfig.matrix_experiment(epsilon=1e-8)
        assert loss_eps(np.eye(2), np.zeros((1, 2, 2)), cfg) == pytest.approx(4e-4)

    def test_permutation_invariance(self):
        mats = random_symmetric(4, 4, 0)
        U = haar_rotation(4, np.random.default_rng(1))
        P = np.eye(4)[:, [3, 1, 0, 2]]
        cfg = LossConfig.matrix_experiment()
        assert loss_eps(U @ P, mats, cfg) == pytest.approx(loss_eps(U, mats, cfg), abs=1e-12)

    def test_sign_flip_invariance(self):
        mats = random_symmetric(3, 3, 2)
        U = haar_rotation(3, np.random.default_rng(3))
        flip = np.diag([-1.0, 1.0, 1.0])
        cfg = LossConfig.matrix_experiment()
        assert loss_eps(flip @ U, mats, cfg) == pytest.approx(loss_eps(U, mats, cfg), rel=1e-12)

    def test_half_two_zero_set(self):
        assert loss_half_two(np.eye(3), np.zeros((2, 3, 3))) == 0.0

    def test_half_two_exchange_matrix(self):
        H = np.array([[[0.0, 1.0], [1.0, 0.0]]])
        assert loss_half_two(np.eye(2), H) == pytest.approx(4.0)

    def test_half_two_is_homogeneous(self):
        mats = random_symmetric(3, 3, 4)
        U = haar_rotation(3, np.random.default_rng(5))
        assert loss_half_two(U, 4 * mats) == pytest.approx(4 * loss_half_two(U, mats))

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            loss_eps(np.eye(3), np.zeros((1, 2, 2)), OFF_DIAGONAL)

    def test_batch_matches_single(self):
        mats = random_symmetric(5, 3, 6)
        rng = np.random.default_rng(7)
        Us = np.stack([haar_rotation(3, rng) for _ in range(4)])
        cfg = LossConfig.matrix_experiment()
        np.testing.assert_allclose(batch_loss_eps(Us, mats, cfg), [loss_eps(U, mats, cfg) for U in Us])
        np.testing.assert_allclose(batch_loss_half_two(Us, mats), [loss_half_two(U, mats) for U in Us])


class TestEuclideanGradient:
    """Tests for the gradient of the smoothed loss."""

    def test_zero_set(self):
        G = euclidean_gradient(np.eye(3), np.zeros((2, 3, 3)), OFF_DIAGONAL)
        np.testing.assert_array_equal(G, np.zeros((3, 3)))

    def test_diagonal_set_is_critical(self):
        mats = np.stack([np.diag([1.0, 2.0, 3.0]), np.diag([-1.0, 0.5, 2.0])])
        G = euclidean_gradient(np.eye(3), mats, OFF_DIAGONAL)
        np.testing.assert_allclose(G, 0.0, atol=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize(
        "cfg", [OFF_DIAGONAL, LossConfig.matrix_experiment()], ids=["off_diagonal", "matrix"]
    )
    def test_finite_differences(self, seed, cfg):
        """Test the gradient against central differences with step 1e-6."""
        mats = random_symmetric(4, 3, seed)
        U = np.random.default_rng(100 + seed).standard_normal((3, 3))
        G = euclidean_gradient(U, mats, cfg)
        numeric = np.zeros((3, 3))
        step = 1e-6
        for i in range(3):
            for j in range(3):
                E = np.zeros((3, 3))
                E[i, j] = step
                numeric[i, j] = (loss_eps(U + E, mats, cfg) - loss_eps(U - E, mats, cfg)) / (2 * step)
        assert np.max(np.abs(G - numeric)) / np.max(np.abs(numeric)) < 1e-5


class TestSpanBasis:
    """Tests for replacing a set by a basis of its span."""

    def test_dimension_of_span(self):
        mats = random_symmetric(2, 3, 8)
        combos = np.einsum("kn,nij->kij", np.random.default_rng(9).standard_normal((6, 2)), mats)
        assert span_basis(combos).shape == (2, 3, 3)

    def test_scaled_basis_preserves_squares(self):
        mats = random_symmetric(5, 3, 10)
        U = haar_rotation(3, np.random.default_rng(11))
        basis = span_basis(mats, scaled=True)
        squares = lambda arr: np.sum(np.einsum("ji,njk,kl->nil", U, arr, U) ** 2, axis=0)
        np.testing.assert_allclose(squares(basis), squares(mats), atol=1e-10)

    def test_zero_set(self):
        assert span_basis(np.zeros((3, 2, 2))).shape == (1, 2, 2)


class TestRiemannianGeometry:
    """Tests for the Riemannian gradient and the QR retraction."""

    def test_normal_direction_annihilated(self):
        U = haar_rotation(4, np.random.default_rng(0))
        np.testing.assert_allclose(riemannian_gradient(U, U), 0.0, atol=1e-14)

    def test_identity(self):
        G = np.random.default_rng(1).standard_normal((3, 3))
        np.testing.assert_allclose(riemannian_gradient(np.eye(3), G), 0.5 * (G - G.T))

    def test_tangency(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            U = haar_rotation(5, rng)
            X = riemannian_gradient(U, rng.standard_normal((5, 5)))
            assert tangency_residual(U, X) < 1e-10

    def test_retraction_zero_step(self):
        U = haar_rotation(3, np.random.default_rng(3))
        np.testing.assert_array_equal(qr_retraction(U, np.zeros((3, 3))), U)

    def test_retraction_stays_orthogonal(self):
        rng = np.random.default_rng(4)
        U = haar_rotation(4, rng)
        X = riemannian_gradient(U, rng.standard_normal((4, 4)))
        assert orthogonality_defect(qr_retraction(U, 0.1 * X)) < 1e-12

    def test_planar_retraction_angle(self):
        """Test that Retr(I, -tS) is the rotation by atan(t)."""
        t = 0.05
        S = np.array([[0.0, -1.0], [1.0, 0.0]])
        Q = qr_retraction(np.eye(2), -t * S)
        assert np.arctan2(Q[1, 0], Q[0, 0]) == pytest.approx(np.arctan(t))

    def test_degenerate_step(self):
        with pytest.raises(ConvergenceError, match="degenerate retraction step"):
            qr_retraction(np.eye(2), np.eye(2))

    def test_ensure_special(self):
        U = np.diag([1.0, -1.0, 1.0])
        assert np.linalg.det(ensure_special(U)) == pytest.approx(1.0)
