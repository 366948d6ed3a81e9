# Events Package for SPARSEADD
# Event-driven observation of pipeline stages

from .pipeline_events import (
    PipelineEvent,
    StageStartedEvent,
    StageCompletedEvent,
    IterationEvent,
    GridChunkEvaluatedEvent,
    BlockOptimizedEvent,
    TrialCompletedEvent,
)

from .event_bus import (
    PipelineEventBus,
    get_event_bus,
    reset_event_bus,
)

from .observers import StageTimer, TrajectoryRecorder, log_event

__all__ = [
    # Base event
    "PipelineEvent",
    # Stage events
    "StageStartedEvent",
    "StageCompletedEvent",
    # Optimizer events
    "IterationEvent",
    "GridChunkEvaluatedEvent",
    "BlockOptimizedEvent",
    # Batch events
    "TrialCompletedEvent",
    # Event bus
    "PipelineEventBus",
    "get_event_bus",
    "reset_event_bus",
    # Observers
    "StageTimer",
    "TrajectoryRecorder",
    "log_event",
]
