# Support polishing
# Drives the entries outside an identified sparsity support to zero

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core.matrix_set import as_matrix_set, conjugate
from src.events import PipelineEventBus

from .linesearch import BacktrackingLineSearcher
from .loss import weighted_gradient
from .optimizers import Trajectory, publish_iteration
from .riemannian import orthogonality_defect, qr_retraction, riemannian_gradient

logger = logging.getLogger(__name__)

SUPPORT_RTOL = 1e-3
POLISH_ITERS = 2000
POLISH_FLOOR = 1e-30


@dataclass
class PolishResult:
    """Outcome of a support polishing run"""

    U: np.ndarray
    accepted: bool
    residual_before: float
    residual_after: float
    zero_slots: int
    trajectory: Optional[Trajectory] = None


def slot_rms(mats: np.ndarray, U: np.ndarray) -> np.ndarray:
    """sqrt((1/N) sum_n (U^T H_n U)_ij^2) for every slot."""
    return np.sqrt(np.mean(conjugate(mats, U) ** 2, axis=0))


def support_polish(
    mats,
    U,
    rtol: float = SUPPORT_RTOL,
    max_iters: int = POLISH_ITERS,
    step: float = 1e-2,
    bus: Optional[PipelineEventBus] = None,
    run_id: str = "polish",
) -> PolishResult:
    """
    Refit U on the support identified by the smoothed loss.

    Slots whose RMS is at most rtol times the largest RMS form the zero set
    Z; gradient descent on SO(d) with Armijo steps then minimizes
    1/2 (1/N) sum_n sum_{(i,j) in Z} (U^T H_n U)_ij^2. The result is kept
    only if the residual on Z decreased and every slot off Z stays above the
    threshold.
    """
    arr = as_matrix_set(mats)
    U = np.asarray(U, dtype=float)
    rms = slot_rms(arr, U)
    scale = float(rms.max())
    if scale == 0.0:
        return PolishResult(U, False, 0.0, 0.0, 0)
    zero = rms <= rtol * scale
    if not zero.any() or zero.all():
        return PolishResult(U, False, 0.0, 0.0, int(zero.sum()))

    weights = zero.astype(float) / arr.shape[0]

    def objective(V: np.ndarray) -> float:
        M = conjugate(arr, V)
        return 0.5 * float(np.sum(weights * np.sum(M**2, axis=0)))

    searcher = BacktrackingLineSearcher(max_iterations=60, initial_step_size=step)
    traj = Trajectory(method="polish", U=U, run_id=run_id)
    before = float(rms[zero].max())
    value = objective(U)
    current = U
    for iteration in range(max_iters + 1):
        M = conjugate(arr, current)
        X = riemannian_gradient(current, weighted_gradient(arr, current, M, weights))
        grad_norm = float(np.linalg.norm(X))
        traj.record(value, grad_norm, orthogonality_defect(current))
        publish_iteration(bus, traj)
        if value <= POLISH_FLOOR * scale**2 or grad_norm == 0.0 or iteration == max_iters:
            break
        alpha, current, value = searcher.search(
            objective, lambda V, a: qr_retraction(V, a * X), current, value, -(grad_norm**2)
        )
        if alpha == 0.0:
            break
    traj.U = current

    after_rms = slot_rms(arr, current)
    after = float(after_rms[zero].max())
    accepted = after < before and bool(np.all(after_rms[~zero] > rtol * scale))
    logger.debug(
        f"{run_id}: |Z|={int(zero.sum())}, residual {before:.3e} -> {after:.3e}, "
        f"{'accepted' if accepted else 'rejected'} after {traj.iters} iterations"
    )
    return PolishResult(
        current if accepted else U, accepted, before, after, int(zero.sum()), traj
    )
