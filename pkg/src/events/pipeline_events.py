# Pipeline Events for SPARSEADD
# Event classes published by the sparsifying stages

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple


@dataclass
class PipelineEvent:
    """Base class for all pipeline events.

    Stages publish events; timers, trajectory recorders and loggers
    subscribe to them without the stages knowing about their consumers.
    """

    pass


@dataclass
class StageStartedEvent(PipelineEvent):
    """Fired when a pipeline stage begins."""

    stage: str
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class StageCompletedEvent(PipelineEvent):
    """Fired when a pipeline stage finishes.

    `elapsed` is the wall-clock duration in seconds measured by the stage.
    """

    stage: str
    elapsed: float
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class IterationEvent(PipelineEvent):
    """One optimizer iterate (loss, Riemannian gradient norm, defect)."""

    run_id: str
    iteration: int
    loss: float
    grad_norm: float
    defect: float


@dataclass
class GridChunkEvaluatedEvent(PipelineEvent):
    """A memory chunk of the angle lattice has been scored."""

    chunk_index: int
    start: int
    stop: int
    best_loss: float


@dataclass
class BlockOptimizedEvent(PipelineEvent):
    """A diagonal block finished its initialization and optimization."""

    block_index: int
    group: Tuple[int, ...]
    init: str
    final_loss: float
    iters: int


@dataclass
class TrialCompletedEvent(PipelineEvent):
    """A generate-and-sparsify trial finished with its sparsity gaps."""

    trial_index: int
    chi_by_eta: Dict[str, int] = field(default_factory=dict)
    optimality_gap: Optional[float] = None
