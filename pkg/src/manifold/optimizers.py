# Optimization on SO(d)
# Riemannian gradient descent and the Landing iteration

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg

from src.core.matrix_set import as_matrix_set
from src.errors import ConvergenceError, InvalidInputError
from src.events import IterationEvent, PipelineEventBus
from src.models import LossConfig, OptimizerConfig, OptimizerMethod

from .linesearch import BacktrackingLineSearcher
from .loss import euclidean_gradient, loss_eps
from .riemannian import (
    ensure_special,
    orthogonality_defect,
    qr_retraction,
    riemannian_gradient,
)

logger = logging.getLogger(__name__)

ORTHOGONAL_START_TOL = 1e-8
LANDING_ABORT_DEFECT = 1.0

STOP_CONVERGED = "converged"
STOP_STALLED = "stalled"
STOP_MAX_ITERS = "max_iters"


@dataclass
class Trajectory:
    """Per-iteration summary of an optimizer run and its final iterate"""

    method: str
    U: np.ndarray
    losses: List[float] = field(default_factory=list)
    grad_norms: List[float] = field(default_factory=list)
    defects: List[float] = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""
    run_id: str = ""

    @property
    def iters(self) -> int:
        return max(len(self.losses) - 1, 0)

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else math.nan

    def record(self, loss: float, grad_norm: float, defect: float) -> None:
        self.losses.append(float(loss))
        self.grad_norms.append(float(grad_norm))
        self.defects.append(float(defect))


def _prepare_start(U0, d: int) -> np.ndarray:
    U0 = np.asarray(U0, dtype=float)
    if U0.shape != (d, d):
        raise InvalidInputError(f"Initial transform of shape {U0.shape}, expected {(d, d)}")
    if orthogonality_defect(U0) > ORTHOGONAL_START_TOL * max(1, d):
        raise InvalidInputError("Initial transform is not orthogonal")
    return ensure_special(U0)


def publish_iteration(bus: Optional[PipelineEventBus], traj: Trajectory) -> None:
    if bus is not None and bus.has_subscribers(IterationEvent):
        bus.publish(
            IterationEvent(
                run_id=traj.run_id,
                iteration=len(traj.losses) - 1,
                loss=traj.losses[-1],
                grad_norm=traj.grad_norms[-1],
                defect=traj.defects[-1],
            )
        )


def rgd_minimize(
    mats,
    U0,
    opt: OptimizerConfig,
    cfg: LossConfig,
    bus: Optional[PipelineEventBus] = None,
    run_id: str = "rgd",
) -> Trajectory:
    """
    Riemannian gradient descent U <- Retr(U, nu grad l_eps(U)).

    Retr(U, V) is the Q factor of U - V, so the step moves against the
    Riemannian gradient. With backtracking the step is chosen by Armijo's
    rule and only decreasing steps are accepted; otherwise nu is fixed.

    Raises:
        ConvergenceError: if the loss becomes non-finite
    """
    arr = as_matrix_set(mats)
    U = _prepare_start(U0, arr.shape[1])
    traj = Trajectory(method=OptimizerMethod.RGD.value, U=U, run_id=run_id)
    searcher = BacktrackingLineSearcher(initial_step_size=opt.step) if opt.backtracking else None

    def objective(V: np.ndarray) -> float:
        return loss_eps(V, arr, cfg)

    loss = objective(U)
    for iteration in range(opt.max_iters + 1):
        if not math.isfinite(loss):
            raise ConvergenceError(f"non-finite loss at iteration {iteration}")
        X = riemannian_gradient(U, euclidean_gradient(U, arr, cfg))
        grad_norm = float(np.linalg.norm(X))
        traj.record(loss, grad_norm, orthogonality_defect(U))
        publish_iteration(bus, traj)

        if grad_norm <= opt.grad_tol:
            traj.converged = True
            traj.stop_reason = STOP_CONVERGED
            break
        if iteration == opt.max_iters:
            traj.stop_reason = STOP_MAX_ITERS
            break

        if searcher is not None:
            alpha, U_next, loss_next = searcher.search(
                objective, lambda V, a: qr_retraction(V, a * X), U, loss, -(grad_norm**2)
            )
            if alpha == 0.0:
                # the loss no longer resolves a decrease; not a critical point
                logger.debug(f"{run_id}: stalled at iteration {iteration} with grad {grad_norm:.3e}")
                traj.stop_reason = STOP_STALLED
                break
        else:
            U_next = qr_retraction(U, opt.step * X)
            loss_next = objective(U_next)
        U, loss = U_next, loss_next

    traj.U = U
    logger.debug(
        f"{run_id}: {traj.iters} iterations ({traj.stop_reason}), loss {traj.final_loss:.6e}, "
        f"grad {traj.grad_norms[-1]:.3e}"
    )
    return traj


def landing_minimize(
    mats,
    U0,
    opt: OptimizerConfig,
    cfg: LossConfig,
    bus: Optional[PipelineEventBus] = None,
    run_id: str = "landing",
) -> Trajectory:
    """
    Landing iteration U <- U - nu (grad l_eps(U) + lambda (U U^T - I) U).

    Iterates live in the ambient space; the penalty pulls them towards the
    orthogonal group. Stops when the gradient and the defect are both small.

    With a fixed step the loss term keeps the iterates at a defect of order
    nu ||grad||^2 / lambda. A run that ends without converging therefore
    lands: the penalty step alone is repeated (at most max_iters times) until
    the defect is below defect_tol, and the landed point is recorded last.

    Raises:
        ConvergenceError: non-finite loss or defect above 1
    """
    arr = as_matrix_set(mats)
    d = arr.shape[1]
    U = _prepare_start(U0, d)
    traj = Trajectory(method=OptimizerMethod.LANDING.value, U=U, run_id=run_id)
    eye = np.eye(d)

    for iteration in range(opt.max_iters + 1):
        loss = loss_eps(U, arr, cfg)
        if not math.isfinite(loss):
            raise ConvergenceError(f"non-finite loss at iteration {iteration}")
        defect = orthogonality_defect(U)
        if defect > LANDING_ABORT_DEFECT:
            raise ConvergenceError(
                f"left attraction region at iteration {iteration} (defect {defect:.3e}); reduce the step size"
            )
        X = riemannian_gradient(U, euclidean_gradient(U, arr, cfg))
        grad_norm = float(np.linalg.norm(X))
        traj.record(loss, grad_norm, defect)
        publish_iteration(bus, traj)

        if grad_norm <= opt.grad_tol and defect <= opt.defect_tol:
            traj.converged = True
            traj.stop_reason = STOP_CONVERGED
            break
        if iteration == opt.max_iters:
            traj.stop_reason = STOP_MAX_ITERS
            break
        U = U - opt.step * (X + opt.landing_penalty * (U @ U.T - eye) @ U)

    if not traj.converged and traj.defects[-1] > opt.defect_tol:
        U = land(U, opt)
        traj.record(
            loss_eps(U, arr, cfg),
            float(np.linalg.norm(riemannian_gradient(U, euclidean_gradient(U, arr, cfg)))),
            orthogonality_defect(U),
        )
        publish_iteration(bus, traj)

    traj.U = U
    logger.debug(
        f"{run_id}: {traj.iters} iterations ({traj.stop_reason}), loss {traj.final_loss:.6e}, "
        f"defect {traj.defects[-1]:.3e}"
    )
    return traj


def land(U: np.ndarray, opt: OptimizerConfig) -> np.ndarray:
    """Penalty-only steps U <- U - nu lambda (U U^T - I) U until the defect is below defect_tol."""
    eye = np.eye(U.shape[0])
    rate = opt.step * opt.landing_penalty
    for _ in range(opt.max_iters):
        residual = U @ U.T - eye
        if np.linalg.norm(residual) <= opt.defect_tol:
            break
        U = U - rate * residual @ U
    return U


def optimize(
    mats,
    U0,
    opt: OptimizerConfig,
    cfg: LossConfig,
    bus: Optional[PipelineEventBus] = None,
    run_id: Optional[str] = None,
) -> Trajectory:
    """Dispatch to the configured optimizer."""
    if opt.method == OptimizerMethod.LANDING:
        return landing_minimize(mats, U0, opt, cfg, bus, run_id or "landing")
    return rgd_minimize(mats, U0, opt, cfg, bus, run_id or "rgd")


def project_to_rotation(U: np.ndarray) -> np.ndarray:
    """Nearest orthogonal matrix (polar factor), mapped into SO(d)."""
    Q, _ = scipy.linalg.polar(np.asarray(U, dtype=float))
    return ensure_special(Q)
