"""Logging and in-process telemetry for alignkit runs."""

from __future__ import annotations

import logging
import time
from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from threading import Lock
from typing import Any, Iterator, Mapping


def configure_logging(level: str = "WARNING") -> None:
    """Configure standard logging on stderr."""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format="%(asctime)s | %(levelname)s | %(message)s",
    )


def get_logger() -> logging.Logger:
    return logging.getLogger("alignkit")


@dataclass(slots=True)
class TelemetryEvent:
    name: str
    attributes: Mapping[str, Any] = field(default_factory=dict)
    timestamp: datetime = field(default_factory=lambda: datetime.now(timezone.utc))


class TelemetryStore:
    """In-memory buffer holding recent events (optimizer runs, timings, verdicts)."""

    def __init__(self, max_events: int = 1000) -> None:
        self._events: deque[TelemetryEvent] = deque(maxlen=max_events)
        self._lock = Lock()

    def record(self, event: TelemetryEvent) -> None:
        with self._lock:
            self._events.append(event)

    def list_events(self, *, limit: int = 50, name: str | None = None) -> list[TelemetryEvent]:
        with self._lock:
            events = list(self._events)

        if name:
            events = [evt for evt in events if evt.name == name]
        return events[-limit:]

    def timings(self) -> dict[str, float]:
        """Latest recorded duration per timed section, in seconds."""
        with self._lock:
            events = [evt for evt in self._events if evt.name == "timing"]
        return {str(evt.attributes["section"]): float(evt.attributes["seconds"]) for evt in events}

    def reset(self) -> None:
        with self._lock:
            self._events.clear()


telemetry_store = TelemetryStore()


def emit_event(event: TelemetryEvent) -> None:
    """Record an event and mirror it to the debug log."""
    get_logger().debug("%s %s", event.name, dict(event.attributes))
    telemetry_store.record(event)


@contextmanager
def timed(section: str) -> Iterator[None]:
    start = time.perf_counter()
    try:
        yield
    finally:
        emit_event(
            TelemetryEvent(
                name="timing",
                attributes={"section": section, "seconds": time.perf_counter() - start},
            )
        )
