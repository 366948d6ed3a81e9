# Geometry of the orthogonal group
# Riemannian gradient, QR retraction and orthogonality diagnostics

import numpy as np
import scipy.linalg

from src.errors import ConvergenceError

DEGENERATE_PIVOT = 1e-12


def riemannian_gradient(U: np.ndarray, G: np.ndarray) -> np.ndarray:
    """grad F(U) = 1/2 G - 1/2 U G^T U for the embedded metric on O(d)."""
    return 0.5 * G - 0.5 * U @ G.T @ U


def qr_retraction(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """
    Retr(U, V) = Q factor of U - V with diag(R) > 0.

    Raises:
        ConvergenceError: if U - V is numerically singular
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if not np.any(V):
        return U.copy()
    Q, R = scipy.linalg.qr(U - V)
    diag = np.diag(R)
    if np.min(np.abs(diag)) <= DEGENERATE_PIVOT * max(1.0, np.max(np.abs(diag))):
        raise ConvergenceError("degenerate retraction step (reduce the step size)")
    return Q * np.sign(diag)[None, :]


def orthogonality_defect(U: np.ndarray) -> float:
    """||U U^T - I||_F."""
    return float(np.linalg.norm(U @ U.T - np.eye(U.shape[0])))


def tangency_residual(U: np.ndarray, X: np.ndarray) -> float:
    """||X U^T + U X^T||_F, zero for tangent vectors at orthogonal U."""
    return float(np.linalg.norm(X @ U.T + U @ X.T))


def ensure_special(U: np.ndarray) -> np.ndarray:
    """Flip the first column if det(U) = -1, mapping O(d) onto SO(d)."""
    U = np.array(U, dtype=float, copy=True)
    if np.linalg.det(U) < 0:
        U[:, 0] = -U[:, 0]
    return U
