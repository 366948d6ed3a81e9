# Jacobi rotations
# Planar rotations, the angle parametrization of SO(d) and its inverse

import logging
import math
from functools import lru_cache
from typing import Tuple

import numpy as np

from src.errors import InvalidInputError

logger = logging.getLogger(__name__)


def n_angles(d: int) -> int:
    return d * (d - 1) // 2


def jacobi_rotation(r: int, alpha: float, d: int) -> np.ndarray:
    """
    Identity except the planar rotation in rows/cols (r, r+1), 0-based r.

    R[r, r] = cos, R[r, r+1] = -sin, R[r+1, r] = sin, R[r+1, r+1] = cos.
    """
    if not 0 <= r <= d - 2:
        raise InvalidInputError(f"Rotation axis {r} outside [0, {d - 2}]")
    R = np.eye(d)
    c, s = math.cos(alpha), math.sin(alpha)
    R[r, r], R[r, r + 1] = c, -s
    R[r + 1, r], R[r + 1, r + 1] = s, c
    return R


def apply_jacobi_right(A: np.ndarray, r: int, alpha) -> np.ndarray:
    """
    In-place A <- A R(r, alpha), touching only columns r and r+1.

    Works on a single matrix or a stack (..., d, d) with one angle per matrix.
    """
    c = np.cos(alpha)
    s = np.sin(alpha)
    if np.ndim(c):
        c = np.asarray(c)[..., None]
        s = np.asarray(s)[..., None]
    left = A[..., :, r].copy()
    right = A[..., :, r + 1]
    A[..., :, r] = c * left + s * right
    A[..., :, r + 1] = -s * left + c * right
    return A


@lru_cache(maxsize=None)
def angle_layout(d: int) -> Tuple[Tuple[int, int, int, int], ...]:
    """
    Factor order of the parametrization as (r, j, flat index, axis).

    r and j are 1-based as in prod_{r=1}^{d-1} prod_{j=1}^{r} R(d-1-r+j, alpha^r_j).
    The flat vector stores alpha^r_1 (r = 1..d-1) first, then alpha^r_j for
    j >= 2 ordered by r and j. `axis` is the 0-based rotation axis.
    """
    layout = []
    for r in range(1, d):
        for j in range(1, r + 1):
            if j == 1:
                flat = r - 1
            else:
                flat = (d - 1) + (r - 2) * (r - 1) // 2 + (j - 2)
            layout.append((r, j, flat, d - 2 - r + j))
    return tuple(layout)


def angle_bounds(d: int) -> np.ndarray:
    """Upper bound of each flat angle: 2 pi for the first d-1, pi for the rest."""
    bounds = np.full(n_angles(d), math.pi)
    bounds[: d - 1] = 2 * math.pi
    return bounds


def angles_to_rotation(alpha, d: int) -> np.ndarray:
    """
    U(alpha) in SO(d) from the flat angle vector.

    A 2-d input (batch, d(d-1)/2) yields a stack of rotations.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape[-1] != n_angles(d):
        raise InvalidInputError(
            f"Expected {n_angles(d)} angles for d={d}, got {alpha.shape[-1]}"
        )
    batch = alpha.shape[:-1]
    U = np.broadcast_to(np.eye(d), batch + (d, d)).copy()
    for _, _, flat, axis in angle_layout(d):
        apply_jacobi_right(U, axis, alpha[..., flat])
    return U


def _first_row_angles(row: np.ndarray) -> np.ndarray:
    """
    Angles a_1..a_{k-1} with e_1^T R(1,a_1) ... R(k-1,a_{k-1}) = row.

    The row has the hyperspherical form (c1, -s1 c2, s1 s2 c3, ...);
    a_1 in [0, 2 pi), the others in [0, pi].
    """
    k = row.shape[0]
    z = row * np.array([(-1.0) ** i for i in range(k)])
    angles = np.zeros(k - 1)
    tail = np.linalg.norm(z[1:])
    s1 = tail if z[-1] >= 0 else -tail
    angles[0] = math.atan2(s1, z[0]) % (2 * math.pi)
    if k == 2 or tail == 0.0:
        return angles
    w = z[1:] / s1
    for m in range(len(w) - 1):
        rest = np.linalg.norm(w[m + 1 :])
        angles[m + 1] = math.atan2(rest, w[m])
    return angles


def rotation_to_angles(U) -> np.ndarray:
    """
    Flat angles alpha with angles_to_rotation(alpha) = U for U in SO(d).

    The last factor group touches every coordinate and alone shapes the first
    row of U; peeling it leaves a rotation acting on coordinates 2..d, handled
    recursively.
    """
    U = np.array(U, dtype=float, copy=True)
    d = U.shape[0]
    if U.shape != (d, d):
        raise InvalidInputError(f"Expected a square matrix, got {U.shape}")
    if d == 1:
        return np.zeros(0)
    alpha = np.zeros(n_angles(d))
    by_rj = {(r, j): flat for r, j, flat, _ in angle_layout(d)}
    current = U
    for r in range(d - 1, 0, -1):
        k = r + 1
        group = _first_row_angles(current[0])
        P = np.eye(k)
        for j in range(1, k):
            apply_jacobi_right(P, j - 1, group[j - 1])
            alpha[by_rj[(r, j)]] = group[j - 1]
        current = (current @ P.T)[1:, 1:]
    return alpha


def snap_to_grid(alpha, h: float) -> np.ndarray:
    """Round every angle down to the lattice h * Z (floor(alpha / h) * h)."""
    if h <= 0:
        raise InvalidInputError("Lattice step must be positive")
    return np.floor(np.asarray(alpha, dtype=float) / h) * h


def random_angles(d: int, rng: np.random.Generator) -> np.ndarray:
    """Angles uniform on [0, 2pi)^{d-1} x [0, pi)^{(d-1)(d-2)/2}."""
    return rng.random(n_angles(d)) * angle_bounds(d)


def covering_bound(d: int, h: float) -> float:
    """Frobenius distance guaranteed between any rotation and the lattice."""
    return d * (d - 1) * h

