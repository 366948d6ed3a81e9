# Sparsifying pipeline
# Vertex minimization, finest block diagonalization and per-block sparse
# component optimization composed into one orthogonal transform

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple, Union

import numpy as np
import scipy.linalg

import config
from src.core.functions import SampledFunction
from src.core.graphs import SparsityPattern, pattern_from_matrix_set
from src.core.matrix_set import as_matrix_set, conjugate
from src.errors import BudgetExceededError, InvalidInputError, SparsifyError, StageError
from src.events import (
    BlockOptimizedEvent,
    PipelineEventBus,
    StageCompletedEvent,
    StageStartedEvent,
)
from src.manifold import (
    OptimalityCertificate,
    Trajectory,
    optimize,
    orthogonality_defect,
    project_to_rotation,
    random_init,
    scan_grid,
    span_basis,
    sufficient_optimality_check,
    support_polish,
)
from src.models import (
    BlockReport,
    InitMethod,
    PipelineConfig,
    PipelineReport,
    SpanCompression,
)

from .block_diag import BlockDiagResult, error_controlled_blockdiag, extract_blocks
from .metrics import GroundTruth, optimality_gap, sparsity_gap
from .vertex_min import GradientSample, VertexReduction, reduce_hessians, vertex_minimize

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOL = 1e-8


@dataclass(frozen=True)
class FunctionSamples:
    """Gradients and Hessians evaluated at the same points."""

    hessians: np.ndarray
    gradients: Optional[np.ndarray] = None
    points: Optional[np.ndarray] = None

    def __post_init__(self):
        hessians = as_matrix_set(self.hessians)
        object.__setattr__(self, "hessians", hessians)
        if self.gradients is not None:
            gradients = np.atleast_2d(np.asarray(self.gradients, dtype=float))
            if gradients.shape != hessians.shape[:2]:
                raise InvalidInputError(
                    f"Gradients of shape {gradients.shape} do not pair with "
                    f"{hessians.shape[0]} Hessians of dimension {hessians.shape[1]}"
                )
            object.__setattr__(self, "gradients", gradients)
        if self.points is not None:
            points = np.atleast_2d(np.asarray(self.points, dtype=float))
            if points.shape[0] != hessians.shape[0]:
                raise InvalidInputError("Points and Hessians differ in number")
            object.__setattr__(self, "points", points)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "FunctionSamples":
        if "hessians" not in data:
            raise InvalidInputError("Samples need a 'hessians' entry")
        return cls(data["hessians"], data.get("gradients"), data.get("points"))

    @property
    def d(self) -> int:
        return self.hessians.shape[1]

    @property
    def N(self) -> int:
        return self.hessians.shape[0]


@dataclass
class BlockOutcome:
    """Initialization, optimizer trajectory and result of one diagonal block"""

    index: int
    group: Tuple[int, ...]
    init: str
    U: np.ndarray
    trajectory: Optional[Trajectory] = None
    polished: bool = False

    @property
    def final_loss(self) -> float:
        return self.trajectory.final_loss if self.trajectory is not None else 0.0

    @property
    def iters(self) -> int:
        return self.trajectory.iters if self.trajectory is not None else 0


@dataclass
class PipelineResult:
    """Composed transform, intermediate stages and evaluation of one run"""

    U_total: np.ndarray
    d1: int
    vertex: Optional[VertexReduction]
    blockdiag: BlockDiagResult
    blocks: List[BlockOutcome]
    patterns: Dict[float, SparsityPattern]
    seed: int
    config: PipelineConfig
    chi: Optional[Dict[float, int]] = None
    optimality_gap: Optional[float] = None
    certificate: Optional[OptimalityCertificate] = None
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.U_total.shape[0]

    @property
    def profile(self) -> Tuple[int, ...]:
        return self.blockdiag.profile

    def to_report(self) -> PipelineReport:
        """JSON-ready report; pattern indices are 1-based."""
        patterns = {}
        for eta, p in self.patterns.items():
            patterns[f"{eta:g}"] = {
                "off_diag": [[i + 1, j + 1] for i, j in sorted(p.off_diag)],
                "diag": [i + 1 for i in sorted(p.diag)],
                "ordered_count": p.ordered_count,
            }
        return PipelineReport(
            config=self.config.model_dump(mode="json"),
            d=self.d,
            d1=self.d1,
            profile=list(self.profile),
            per_block=[
                BlockReport(size=len(b.group), init=b.init, final_loss=b.final_loss, iters=b.iters)
                for b in self.blocks
            ],
            patterns_by_eta=patterns,
            chi_by_eta=None if self.chi is None else {f"{e:g}": c for e, c in self.chi.items()},
            optimality_gap=self.optimality_gap,
            U_total=self.U_total.tolist(),
            seed=self.seed,
        )


@contextmanager
def _stage(name: str, bus: Optional[PipelineEventBus], **details) -> Iterator[Dict[str, Any]]:
    """Publish start/completion of a stage and label failures with its name."""
    if bus is not None:
        bus.publish(StageStartedEvent(name, dict(details)))
    started = time.perf_counter()
    summary: Dict[str, Any] = {}
    try:
        yield summary
    except (StageError, InvalidInputError):
        raise
    except SparsifyError as exc:
        raise StageError(name, str(exc), exc) from exc
    except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        raise StageError(name, str(exc), exc) from exc
    elapsed = time.perf_counter() - started
    logger.debug(f"Stage {name} finished in {elapsed:.3f}s")
    if bus is not None:
        bus.publish(StageCompletedEvent(name, elapsed, summary))


def sample_function(
    f: SampledFunction, n_points: Optional[int] = None, seed: int = config.DEFAULT_SEED
) -> FunctionSamples:
    """Gradients and Hessians of f at N = 100 d points uniform in the ball."""
    n = n_points if n_points is not None else config.SAMPLES_PER_DIM * f.d
    if n < 1:
        raise InvalidInputError("At least one sample point is required")
    points = f.sample_points(n, np.random.default_rng(seed))
    hessians = f.hessian(points)
    return FunctionSamples(0.5 * (hessians + np.swapaxes(hessians, -1, -2)), f.gradient(points), points)


def _block_seed(seed: int, index: int) -> int:
    return int(np.random.default_rng([seed, index]).integers(0, 2**31 - 1))


def _initial_transform(
    basis: np.ndarray, index: int, cfg: PipelineConfig, bus: Optional[PipelineEventBus]
) -> Tuple[np.ndarray, str]:
    s = basis.shape[1]
    if cfg.init == InitMethod.IDENTITY:
        return np.eye(s), InitMethod.IDENTITY.value
    if cfg.init == InitMethod.GRID:
        grid = cfg.grid.model_copy(update={"h": cfg.grid.step_for(s)})
        try:
            result = scan_grid(basis, grid, cfg.loss, bus)
            return result.U, f"grid(h={grid.h:g})"
        except BudgetExceededError as exc:
            logger.warning(f"Block {index} (size {s}): {exc}; falling back to random init")
    U = random_init(
        basis,
        seed=_block_seed(cfg.seed, index),
        opt=cfg.optimizer,
        cfg=cfg.loss,
        candidates=cfg.random_candidates,
        iters=cfg.random_iters,
        bus=bus,
    )
    return U, InitMethod.RANDOM.value


def optimize_block(
    block: np.ndarray,
    index: int,
    group: Tuple[int, ...],
    cfg: PipelineConfig,
    bus: Optional[PipelineEventBus] = None,
) -> BlockOutcome:
    """Sparse component step for one diagonal block: compress, initialize, optimize, polish."""
    s = block.shape[1]
    if s == 1:
        return BlockOutcome(index, group, "trivial", np.eye(1))

    if cfg.compression == SpanCompression.NONE:
        basis = block
    else:
        basis = span_basis(block, cfg.span_tau_rel, scaled=cfg.compression == SpanCompression.SCALED)

    U0, init = _initial_transform(basis, index, cfg, bus)
    trajectory = optimize(basis, U0, cfg.optimizer, cfg.loss, bus, run_id=f"block{index}")
    U = project_to_rotation(trajectory.U)

    polished = False
    if cfg.polish:
        outcome = support_polish(basis, U, step=cfg.optimizer.step, bus=bus, run_id=f"block{index}/polish")
        U, polished = outcome.U, outcome.accepted

    logger.info(
        f"Block {index} (size {s}): init {init}, {trajectory.iters} iterations ({trajectory.stop_reason}), "
        f"loss {trajectory.final_loss:.6e}{', polished' if polished else ''}"
    )
    if bus is not None:
        bus.publish(BlockOptimizedEvent(index, group, init, trajectory.final_loss, trajectory.iters))
    return BlockOutcome(index, group, init, U, trajectory, polished)


def compose_transform(
    U_V: np.ndarray, d1: int, blockdiag: BlockDiagResult, block_transforms: List[np.ndarray]
) -> np.ndarray:
    """U_V . diag(U_B . blockdiag(U_k), I_{d-d1})."""
    d = U_V.shape[0]
    inner = blockdiag.U @ scipy.linalg.block_diag(*block_transforms)
    embedded = np.eye(d)
    embedded[:d1, :d1] = inner
    return U_V @ embedded


def _normalized(mats: np.ndarray) -> np.ndarray:
    """Scale the set to unit mean squared Frobenius norm (zero sets unchanged)."""
    scale = float(np.sqrt(np.mean(np.sum(mats**2, axis=(1, 2)))))
    return mats / scale if scale > 0 else mats


def run_pipeline(
    samples: Union[FunctionSamples, Mapping[str, Any]],
    cfg: Optional[PipelineConfig] = None,
    truth: Optional[GroundTruth] = None,
    clean_reference=None,
    bus: Optional[PipelineEventBus] = None,
) -> PipelineResult:
    """
    Sparsify a function (or a matrix set) by an orthogonal change of variables.

    Without gradients the vertex step is the identity. Hessians are reduced
    to the active subspace, split into the finest joint blocks and every
    block is sparsified separately; the result composes all transforms.
    With `truth`, chi is evaluated on `clean_reference` when given and on
    the input Hessians otherwise.

    Raises:
        InvalidInputError: malformed samples or configuration
        StageError: a stage failed; `stage` names it
    """
    cfg = cfg or PipelineConfig()
    if not isinstance(samples, FunctionSamples):
        samples = FunctionSamples.from_mapping(samples)
    H = samples.hessians
    d = samples.d
    diagnostics: Dict[str, float] = {}

    with _stage("vertex_min", bus, d=d, N=samples.N) as summary:
        if samples.gradients is not None:
            vertex = vertex_minimize(GradientSample.from_gradients(samples.gradients), cfg.tau_rel)
            reduced = reduce_hessians(H, vertex, diagnostics)
            U_V, d1 = vertex.U_V, vertex.d1
        else:
            vertex, reduced, U_V, d1 = None, H, np.eye(d), d
        if d1 == 0:
            raise StageError("vertex_min", "all gradients vanish: no active variable")
        summary["d1"] = d1

    with _stage("block_diag", bus, d1=d1) as summary:
        blockdiag = error_controlled_blockdiag(_normalized(reduced), cfg.delta, cfg.seed, cfg.gap)
        diagnostics["off_block_residual"] = blockdiag.off_block_residual
        summary["profile"] = list(blockdiag.profile)

    with _stage("sparse_components", bus, blocks=len(blockdiag.structure.groups)) as summary:
        blocks = extract_blocks(blockdiag, reduced)
        groups = blockdiag.structure.groups

        def work(k: int) -> BlockOutcome:
            return optimize_block(blocks[k], k, groups[k], cfg, bus)

        if cfg.jobs > 1 and len(blocks) > 1:
            with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                outcomes = list(pool.map(work, range(len(blocks))))
        else:
            outcomes = [work(k) for k in range(len(blocks))]
        summary["iters"] = sum(o.iters for o in outcomes)

    with _stage("evaluate", bus) as summary:
        U_total = compose_transform(U_V, d1, blockdiag, [o.U for o in outcomes])
        defect = orthogonality_defect(U_total)
        if defect > ORTHOGONALITY_TOL * max(1, d):
            raise StageError("evaluate", f"composed transform is not orthogonal (defect {defect:.3e})")
        transformed = conjugate(H, U_total)
        patterns = {eta: pattern_from_matrix_set(transformed, eta) for eta in cfg.etas}
        certificate = sufficient_optimality_check(H, U_total)

        chi, gap = None, None
        if truth is not None:
            reference = as_matrix_set(clean_reference) if clean_reference is not None else H
            chi = {eta: sparsity_gap(U_total, reference, truth.pattern, eta) for eta in cfg.etas}
            if truth.U is not None:
                gap = optimality_gap(U_total, truth.U, reference, cfg.loss)
            summary["chi"] = {f"{eta:g}": c for eta, c in chi.items()}

    logger.info(
        f"Pipeline finished: d={d}, d1={d1}, profile {blockdiag.profile}"
        + (f", chi {chi}" if chi is not None else "")
    )
    return PipelineResult(
        U_total=U_total,
        d1=d1,
        vertex=vertex,
        blockdiag=blockdiag,
        blocks=outcomes,
        patterns=patterns,
        seed=cfg.seed,
        config=cfg,
        chi=chi,
        optimality_gap=gap,
        certificate=certificate,
        diagnostics=diagnostics,
    )
