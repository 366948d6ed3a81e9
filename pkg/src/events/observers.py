# Event observers
# Stage timing and trajectory recording for run manifests and CSV output

import logging
from typing import Dict, List

from .event_bus import PipelineEventBus
from .pipeline_events import IterationEvent, PipelineEvent, StageCompletedEvent

logger = logging.getLogger(__name__)


class StageTimer:
    """Accumulates wall-clock seconds per stage name."""

    def __init__(self):
        self.timings: Dict[str, float] = {}

    def __call__(self, event: StageCompletedEvent) -> None:
        self.timings[event.stage] = self.timings.get(event.stage, 0.0) + event.elapsed

    def attach(self, bus: PipelineEventBus) -> "StageTimer":
        bus.subscribe(StageCompletedEvent, self)
        return self

    def detach(self, bus: PipelineEventBus) -> None:
        bus.unsubscribe(StageCompletedEvent, self)


class TrajectoryRecorder:
    """Collects optimizer iterates as tidy rows keyed by run id."""

    def __init__(self):
        self.rows: Dict[str, List[Dict[str, float]]] = {}

    def __call__(self, event: IterationEvent) -> None:
        self.rows.setdefault(event.run_id, []).append(
            {
                "iter": event.iteration,
                "loss": event.loss,
                "grad_norm": event.grad_norm,
                "defect": event.defect,
            }
        )

    def attach(self, bus: PipelineEventBus) -> "TrajectoryRecorder":
        bus.subscribe(IterationEvent, self)
        return self

    def detach(self, bus: PipelineEventBus) -> None:
        bus.unsubscribe(IterationEvent, self)


def log_event(event: PipelineEvent) -> None:
    """Global subscriber that mirrors every non-iteration event to the log."""
    if not isinstance(event, IterationEvent):
        logger.debug(f"Event: {event}")
