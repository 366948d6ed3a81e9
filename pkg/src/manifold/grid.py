# Grid search over the Jacobi-angle lattice
# Chunked enumeration of Gamma(h) with a deterministic argmin

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.core.matrix_set import as_matrix_set
from src.errors import BudgetExceededError
from src.events import GridChunkEvaluatedEvent, PipelineEventBus
from src.models import GridConfig, GridSelector, LossConfig

from .loss import batch_loss_eps, batch_loss_half_two
from .rotations import angles_to_rotation, n_angles

logger = logging.getLogger(__name__)

SUGGESTED_STEPS = (0.1, 0.125, 0.25, 0.5, 1.0)


@dataclass(frozen=True)
class GridResult:
    """Best lattice point of a grid search"""

    U: np.ndarray
    angles: np.ndarray
    loss: float
    index: int
    cardinality: int


def lattice_shape(d: int, h: float) -> Tuple[int, ...]:
    """Points per angle: ceil(2pi/h) for the first d-1, ceil(pi/h) for the rest."""
    return (math.ceil(2 * math.pi / h),) * (d - 1) + (math.ceil(math.pi / h),) * (
        (d - 1) * (d - 2) // 2
    )


def grid_cardinality(d: int, h: float) -> int:
    """|Theta(h)| = ceil(2pi/h)^{d-1} * ceil(pi/h)^{(d-1)(d-2)/2}."""
    return math.prod(lattice_shape(d, h))


def _suggest_step(d: int, cap: int) -> Optional[float]:
    for h in SUGGESTED_STEPS:
        if grid_cardinality(d, h) <= cap:
            return h
    return None


def _score_chunk(
    mats: np.ndarray, d: int, shape, g: GridConfig, cfg: Optional[LossConfig], start: int, stop: int
) -> Tuple[int, float]:
    """Local argmin (first occurrence) of the selector on indices [start, stop)."""
    idx = np.arange(start, stop)
    angles = np.stack(np.unravel_index(idx, shape), axis=1) * g.h
    Us = angles_to_rotation(angles, d)
    if g.selector == GridSelector.L_EPS:
        values = batch_loss_eps(Us, mats, cfg or LossConfig())
    else:
        values = batch_loss_half_two(Us, mats)
    best = int(np.argmin(values))
    return start + best, float(values[best])


def scan_grid(
    mats,
    g: GridConfig,
    cfg: Optional[LossConfig] = None,
    bus: Optional[PipelineEventBus] = None,
) -> GridResult:
    """
    Evaluate the selector loss on every lattice rotation.

    Points are enumerated in lexicographic angle order (last angle fastest)
    and scored in chunks of g.block_size, optionally by g.jobs threads. The
    chunk minima are reduced in chunk order with a strict comparison, so
    ties go to the first point encountered.

    Raises:
        BudgetExceededError: if |Theta(h)| exceeds g.max_points
    """
    arr = as_matrix_set(mats)
    d = arr.shape[1]
    if d == 1:
        return GridResult(np.eye(1), np.zeros(0), 0.0, 0, 1)

    shape = lattice_shape(d, g.h)
    count = math.prod(shape)
    if count > g.max_points:
        suggestion = _suggest_step(d, g.max_points)
        hint = f"; try h={suggestion}" if suggestion else ""
        raise BudgetExceededError(
            f"Grid has ceil(2pi/h)^(d-1) * ceil(pi/h)^((d-1)(d-2)/2) = {count} points "
            f"for d={d}, h={g.h}, above the cap {g.max_points}{hint}"
        )

    bounds = [(s, min(s + g.block_size, count)) for s in range(0, count, g.block_size)]
    logger.debug(f"Grid search d={d}, h={g.h}: {count} points in {len(bounds)} chunks")

    def work(bound):
        return _score_chunk(arr, d, shape, g, cfg, *bound)

    if g.jobs > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=g.jobs) as pool:
            results = list(pool.map(work, bounds))
    else:
        results = [work(b) for b in bounds]

    best_index, best_loss = -1, math.inf
    for k, ((start, stop), (index, value)) in enumerate(zip(bounds, results)):
        if bus is not None:
            bus.publish(GridChunkEvaluatedEvent(k, start, stop, value))
        if value < best_loss:
            best_index, best_loss = index, value

    angles = np.array(np.unravel_index(best_index, shape), dtype=float) * g.h
    U = angles_to_rotation(angles, d)
    return GridResult(U, angles, best_loss, best_index, count)


def grid_search(
    mats,
    g: GridConfig,
    cfg: Optional[LossConfig] = None,
    bus: Optional[PipelineEventBus] = None,
) -> np.ndarray:
    """Lattice rotation minimizing the configured selector loss."""
    return scan_grid(mats, g, cfg, bus).U
