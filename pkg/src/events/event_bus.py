# Event Bus for SPARSEADD
# Simple synchronous event bus for pipeline events

import logging
import threading
from typing import Callable, Dict, List, Optional, Type, TypeVar

from .pipeline_events import PipelineEvent

logger = logging.getLogger(__name__)

E = TypeVar("E", bound=PipelineEvent)

EventHandler = Callable[[PipelineEvent], None]


class PipelineEventBus:
    """Simple synchronous event bus for pipeline events.

    Stages publish events (a stage started, an optimizer iterate, a grid
    chunk scored) and observers subscribe to them. Events are processed
    immediately when published, in subscription order. Publishing is
    serialized by a lock so that worker threads of a trial batch can share
    one bus.

    Example usage:

        bus = PipelineEventBus()

        def on_stage_done(event: StageCompletedEvent):
            print(f"{event.stage} took {event.elapsed:.3f}s")

        bus.subscribe(StageCompletedEvent, on_stage_done)
        bus.publish(StageCompletedEvent(stage="vertex_min", elapsed=0.01))
    """

    def __init__(self):
        self._subscribers: Dict[Type[PipelineEvent], List[EventHandler]] = {}
        self._global_subscribers: List[EventHandler] = []
        self._lock = threading.RLock()

    def subscribe(self, event_type: Type[E], handler: Callable[[E], None]) -> None:
        """Subscribe a handler to a specific event type."""
        with self._lock:
            handlers = self._subscribers.setdefault(event_type, [])
            if handler not in handlers:
                handlers.append(handler)
                logger.debug(
                    f"Subscribed {getattr(handler, '__name__', handler)} to {event_type.__name__}"
                )

    def subscribe_all(self, handler: EventHandler) -> None:
        """Subscribe a handler to ALL event types (logging, debugging)."""
        with self._lock:
            if handler not in self._global_subscribers:
                self._global_subscribers.append(handler)

    def unsubscribe(self, event_type: Type[E], handler: Callable[[E], None]) -> bool:
        """Unsubscribe a handler from a specific event type.

        Returns:
            True if the handler was found and removed, False otherwise
        """
        with self._lock:
            try:
                self._subscribers.get(event_type, []).remove(handler)
                return True
            except ValueError:
                return False

    def unsubscribe_all(self, handler: EventHandler) -> bool:
        with self._lock:
            try:
                self._global_subscribers.remove(handler)
                return True
            except ValueError:
                return False

    def publish(self, event: PipelineEvent) -> None:
        """Publish an event to all subscribed handlers.

        Global subscribers are called first, then type-specific ones.
        Handler errors are logged and re-raised.
        """
        event_type = type(event)
        with self._lock:
            handlers = list(self._global_subscribers) + list(
                self._subscribers.get(event_type, [])
            )
            for handler in handlers:
                try:
                    handler(event)
                except Exception as e:
                    logger.error(
                        f"Error in handler {getattr(handler, '__name__', handler)} "
                        f"for {event_type.__name__}: {e}"
                    )
                    raise

    def has_subscribers(self, event_type: Type[PipelineEvent]) -> bool:
        """Check if an event type has any subscribers.

        Optimizers use this to skip building per-iteration events nobody reads.
        """
        return bool(self._global_subscribers) or bool(self._subscribers.get(event_type))


# Singleton instance for shared use across the application
_event_bus_instance: Optional[PipelineEventBus] = None


def get_event_bus() -> PipelineEventBus:
    """Get the shared event bus instance."""
    global _event_bus_instance
    if _event_bus_instance is None:
        _event_bus_instance = PipelineEventBus()
    return _event_bus_instance


def reset_event_bus() -> None:
    """Reset the shared event bus instance, useful for testing."""
    global _event_bus_instance
    _event_bus_instance = PipelineEventBus()
