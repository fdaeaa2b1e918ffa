"""Timeline event capture on a single monotonic process clock.

Event names come from a fixed registry so the analyzer can group them;
tracks are role names, and events on one track never overlap (each role is
a single thread of execution; this is asserted at record time).
"""

from __future__ import annotations

import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

EVENT_REGISTRY = frozenset(
    {
        "learner/weight_sync_write",
        "learner/update",
        "learner/replay_sample",
        "learner/h2d_wait",
        "learner/gap",
        "replay/h2d_lazy_sync",
        "collector/env_step",
        "collector/actor_inference",
        "collector/replay_add",
        "collector/pack",
        "collector/stall",
        "collector/weight_read",
        "transfer/h2d",
        "transfer/h2d_submit",
        "signal/ready",
    }
)


@dataclass
class TraceEvent:
    track: str
    name: str
    ts_start: int  # monotonic ns
    ts_end: int
    args: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.ts_end < self.ts_start:
            raise ValueError("ts_end must be >= ts_start")

    @property
    def duration_ns(self) -> int:
        return self.ts_end - self.ts_start


def now_ns() -> int:
    return time.perf_counter_ns()


class Tracer:
    """Append-only event sink, callable from all roles concurrently."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self._events: list[TraceEvent] = []
        self._lock = threading.Lock()
        self._last_end: dict[str, int] = {}

    def record(self, track: str, name: str, ts_start: int, ts_end: int,
               args: dict | None = None) -> None:
        if not self.enabled:
            return
        if name not in EVENT_REGISTRY:
            raise ValueError(f"unregistered trace event name {name!r}")
        event = TraceEvent(track, name, ts_start, ts_end, args or {})
        with self._lock:
            last = self._last_end.get(track, -1)
            if ts_start < last:
                raise RuntimeError(
                    f"overlapping events on track {track!r}: {name} starts at "
                    f"{ts_start} before previous event ended at {last}"
                )
            self._last_end[track] = ts_end
            self._events.append(event)

    @contextmanager
    def span(self, track: str, name: str, **args):
        """Time a block; emits one complete event when it exits."""
        if not self.enabled:
            yield args
            return
        start = now_ns()
        try:
            yield args
        finally:
            self.record(track, name, start, now_ns(), args)

    def events(self) -> list[TraceEvent]:
        """Snapshot copy of the event list."""
        with self._lock:
            return list(self._events)

    def count(self) -> int:
        with self._lock:
            return len(self._events)


class NullTracer(Tracer):
    """Tracer with recording disabled; spans still execute their bodies."""

    def __init__(self):
        super().__init__(enabled=False)
