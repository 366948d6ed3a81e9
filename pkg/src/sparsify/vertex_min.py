# Vertex minimization
# SVD of stacked gradients and reduction of Hessians to the active subspace

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from src.core.matrix_set import as_matrix_set, conjugate
from src.errors import InvalidInputError

logger = logging.getLogger(__name__)

BORDER_WARN_FACTOR = 10.0


@dataclass(frozen=True)
class GradientSample:
    """Gradients as columns of B (d x N) and the points they were taken at."""

    B: np.ndarray
    points: Optional[np.ndarray] = None

    def __post_init__(self):
        B = np.asarray(self.B, dtype=float)
        if B.ndim != 2 or B.shape[1] < 1:
            raise InvalidInputError("Gradient sample needs at least one column")
        if not np.all(np.isfinite(B)):
            raise InvalidInputError("Gradient sample contains non-finite entries")
        object.__setattr__(self, "B", B)

    @classmethod
    def from_gradients(cls, gradients, points=None) -> "GradientSample":
        """Build from an (N, d) array of gradient rows."""
        grads = np.atleast_2d(np.asarray(gradients, dtype=float))
        if grads.size == 0:
            raise InvalidInputError("Gradient sample needs at least one column")
        return cls(grads.T, points)

    @property
    def d(self) -> int:
        return self.B.shape[0]

    @property
    def N(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class VertexReduction:
    """Left singular basis U_V, active dimension d1 and the thresholds used"""

    U_V: np.ndarray
    d1: int
    singular_values: np.ndarray
    tau_abs: float
    tau_rel: float = 0.0

    @property
    def d(self) -> int:
        return self.U_V.shape[0]


def vertex_minimize(g: GradientSample, tau: float, relative: bool = True) -> VertexReduction:
    """
    Orthogonal transform minimizing the number of active variables.

    The left singular vectors of B with singular value above tau_abs span
    the gradient space; the rest span its complement, along which f_{U_V}
    is constant. With `relative`, tau_abs = tau * sigma_max.
    """
    if tau < 0:
        raise InvalidInputError("tau must be nonnegative")
    U, sigma, _ = np.linalg.svd(g.B, full_matrices=True)
    sigma_max = float(sigma[0]) if sigma.size else 0.0
    tau_abs = tau * sigma_max if relative else tau
    d1 = int(np.sum(sigma > tau_abs))
    singular_values = np.zeros(g.d)
    singular_values[: sigma.size] = sigma
    logger.info(f"Vertex minimization: d={g.d}, N={g.N}, active dimension d1={d1}")
    return VertexReduction(
        U_V=U,
        d1=d1,
        singular_values=singular_values,
        tau_abs=tau_abs,
        tau_rel=tau if relative else 0.0,
    )


def reduce_hessians(
    h, red: VertexReduction, diagnostics: Optional[Dict[str, float]] = None
) -> np.ndarray:
    """
    Top-left d1 x d1 blocks of U_V^T H_n U_V.

    The largest absolute entry of the discarded border is written to
    diagnostics["border_residual"] and logged as a warning above 10 * tau_abs.
    """
    arr = as_matrix_set(h)
    if arr.shape[1] != red.d:
        raise InvalidInputError(
            f"Hessians of dimension {arr.shape[1]} do not match reduction of dimension {red.d}"
        )
    full = conjugate(arr, red.U_V)
    d1 = red.d1
    border = np.abs(full).copy()
    border[:, :d1, :d1] = 0.0
    residual = float(border.max()) if border.size else 0.0
    if diagnostics is not None:
        diagnostics["border_residual"] = residual
    if residual > BORDER_WARN_FACTOR * red.tau_abs and d1 < red.d:
        logger.warning(
            f"Discarded Hessian border {residual:.3e} exceeds 10*tau_abs={BORDER_WARN_FACTOR * red.tau_abs:.3e}"
        )
    return full[:, :d1, :d1]
