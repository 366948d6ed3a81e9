# Sparsity losses on matrix sets
# Smoothed l0 surrogate, the l_{1/2,2} selector, its gradient and span compression

import logging
from typing import Tuple

import numpy as np

from src.core.matrix_set import as_matrix_set, conjugate
from src.errors import InvalidInputError
from src.models import LossConfig, Normalization

logger = logging.getLogger(__name__)


def _check_dims(U: np.ndarray, mats: np.ndarray) -> None:
    if U.shape != (mats.shape[1], mats.shape[1]):
        raise InvalidInputError(
            f"Transform of shape {U.shape} does not match matrices of dimension {mats.shape[1]}"
        )


def _slot_mask(d: int, include_diagonal: bool) -> np.ndarray:
    mask = np.ones((d, d), dtype=bool)
    if not include_diagonal:
        np.fill_diagonal(mask, False)
    return mask


def _scales(n: int, cfg: LossConfig) -> Tuple[float, float]:
    """
    (outer, inner) factors of the loss.

    mean_over_N:    sum sqrt((1/N) sum_n M^2 + eps)
    inv_sqrt_count: (1/sqrt(N)) sum sqrt(sum_n M^2 + eps)
    """
    if cfg.normalization == Normalization.MEAN_OVER_N:
        return 1.0, 1.0 / n
    return 1.0 / np.sqrt(n), 1.0


def loss_eps(U, mats, cfg: LossConfig) -> float:
    """Smoothed sparsity loss l_eps(U) of the conjugated set U^T H_n U."""
    arr = as_matrix_set(mats)
    U = np.asarray(U, dtype=float)
    _check_dims(U, arr)
    outer, inner = _scales(arr.shape[0], cfg)
    squares = np.sum(conjugate(arr, U) ** 2, axis=0)
    mask = _slot_mask(arr.shape[1], cfg.include_diagonal)
    return float(outer * np.sum(np.sqrt(inner * squares[mask] + cfg.epsilon)))


def loss_half_two(U, mats) -> float:
    """(1/sqrt(N)) (sum_ij (sum_n (U^T H_n U)_ij^2)^{1/4})^2."""
    arr = as_matrix_set(mats)
    U = np.asarray(U, dtype=float)
    _check_dims(U, arr)
    squares = np.sum(conjugate(arr, U) ** 2, axis=0)
    return float(np.sum(squares**0.25) ** 2 / np.sqrt(arr.shape[0]))


def euclidean_gradient(U, mats, cfg: LossConfig) -> np.ndarray:
    """
    Gradient of loss_eps with respect to the entries of U.

    With M_n = U^T H_n U and W the entrywise weight of the smoothed square
    roots, the gradient is 2 sum_n H_n U (W o M_n) for symmetric H_n.
    """
    arr = as_matrix_set(mats)
    U = np.asarray(U, dtype=float)
    _check_dims(U, arr)
    outer, inner = _scales(arr.shape[0], cfg)
    M = conjugate(arr, U)
    squares = np.sum(M**2, axis=0)
    W = outer * inner / np.sqrt(inner * squares + cfg.epsilon)
    W[~_slot_mask(arr.shape[1], cfg.include_diagonal)] = 0.0
    return weighted_gradient(arr, U, M, W)


def weighted_gradient(arr: np.ndarray, U: np.ndarray, M: np.ndarray, W: np.ndarray) -> np.ndarray:
    """2 sum_n H_n U (W o M_n): gradient of sum_n sum_ij phi_ij(M_n) with dphi/dM = W o M."""
    return 2.0 * np.einsum("njk,kl,nli->ji", arr, U, W[None, :, :] * M, optimize=True)


def span_basis(mats, tau_rel: float = 1e-10, scaled: bool = False) -> np.ndarray:
    """
    Basis of span{H_n} from the SVD of the vectorized set.

    Right singular vectors with singular value above tau_rel * sigma_max are
    reshaped to matrices. With `scaled`, each is multiplied by its singular
    value, so that sum_n (U^T H_n U)_ij^2 is preserved for every U.
    """
    arr = as_matrix_set(mats)
    n, d, _ = arr.shape
    flat = arr.reshape(n, d * d)
    _, sigma, vt = np.linalg.svd(flat, full_matrices=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return np.zeros((1, d, d))
    keep = sigma > tau_rel * sigma[0]
    basis = vt[keep].reshape(-1, d, d)
    basis = 0.5 * (basis + np.swapaxes(basis, -1, -2))
    if scaled:
        basis = basis * sigma[keep][:, None, None]
    logger.debug(f"Span basis: {int(keep.sum())} of {n} matrices kept (d={d})")
    return basis


def batch_squares(Us: np.ndarray, mats: np.ndarray) -> np.ndarray:
    """sum_n (U_b^T H_n U_b)^2 for a stack of transforms, shape (B, d, d)."""
    out = np.zeros(Us.shape)
    for H in mats:
        M = np.matmul(np.swapaxes(Us, -1, -2), np.matmul(H, Us))
        out += M * M
    return out


def batch_loss_eps(Us: np.ndarray, mats, cfg: LossConfig) -> np.ndarray:
    """loss_eps evaluated for every transform of a stack."""
    arr = as_matrix_set(mats)
    outer, inner = _scales(arr.shape[0], cfg)
    squares = batch_squares(Us, arr)
    mask = _slot_mask(arr.shape[1], cfg.include_diagonal)
    return outer * np.sum(np.sqrt(inner * squares[:, mask] + cfg.epsilon), axis=1)


def batch_loss_half_two(Us: np.ndarray, mats) -> np.ndarray:
    """loss_half_two evaluated for every transform of a stack."""
    arr = as_matrix_set(mats)
    squares = batch_squares(Us, arr)
    return np.sum(squares.reshape(len(Us), -1) ** 0.25, axis=1) ** 2 / np.sqrt(arr.shape[0])
