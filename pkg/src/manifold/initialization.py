# Initialization of the per-block optimizer

import logging
from typing import Optional

import numpy as np

import config
from src.core.matrix_set import as_matrix_set
from src.events import PipelineEventBus
from src.models import LossConfig, OptimizerConfig

from .loss import loss_half_two
from .optimizers import optimize, project_to_rotation
from .rotations import angles_to_rotation, random_angles

logger = logging.getLogger(__name__)


def random_init(
    mats,
    seed: int,
    opt: Optional[OptimizerConfig] = None,
    cfg: Optional[LossConfig] = None,
    candidates: int = config.RANDOM_INIT_CANDIDATES,
    iters: int = config.RANDOM_INIT_ITERS,
    bus: Optional[PipelineEventBus] = None,
) -> np.ndarray:
    """
    Best of `candidates` short optimizer runs from uniformly drawn angles.

    Each candidate runs `iters` iterations of the configured optimizer; the
    result minimizing l_{1/2,2} is returned (first one on ties).
    """
    arr = as_matrix_set(mats)
    d = arr.shape[1]
    if d == 1:
        return np.eye(1)
    opt = (opt or OptimizerConfig()).model_copy(update={"max_iters": iters})
    cfg = cfg or LossConfig.matrix_experiment()
    rng = np.random.default_rng(seed)

    best_U, best_value = None, np.inf
    for k in range(candidates):
        U0 = angles_to_rotation(random_angles(d, rng), d)
        traj = optimize(arr, U0, opt, cfg, bus, run_id=f"random_init/{k}")
        U = project_to_rotation(traj.U)
        value = loss_half_two(U, arr)
        logger.debug(f"Random init candidate {k}: l_half_two {value:.6e}")
        if value < best_value:
            best_U, best_value = U, value
    logger.info(f"Random initialization evaluated {candidates} candidates (best {best_value:.6e})")
    return best_U
