"""Cross-role synchronization: weight slot, rollout ring, shutdown signal."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

from ..traceview import Tracer, now_ns

DEADLOCK_TIMEOUT_S = 10.0


class PipelineStall(RuntimeError):
    """A role made no progress for longer than the deadlock timeout."""


def _freeze(params) -> None:
    for w, b in params.layers:
        w.setflags(write=False)
        b.setflags(write=False)
    params.log_std.setflags(write=False)


class WeightSlot:
    """Single-writer weight handoff: the learner publishes full copies with
    a strictly increasing version; readers always see a consistent pair."""

    def __init__(self, tracer: Tracer | None = None):
        self._tracer = tracer if tracer is not None else Tracer(enabled=False)
        self._lock = threading.Lock()
        self._pair: tuple[int, object] | None = None
        self.publish_timestamp: int = 0

    @property
    def version(self) -> int:
        pair = self._pair
        return 0 if pair is None else pair[0]

    def publish(self, params, track: str = "learner") -> int:
        """Copy, freeze, and swap in the new weights; returns the version."""
        with self._tracer.span(track, "learner/weight_sync_write") as args:
            with self._lock:
                version = self.version + 1
                copied = params.copy()
                if hasattr(copied, "layers"):
                    _freeze(copied)
                else:  # actor/critic record
                    _freeze(copied.actor)
                    _freeze(copied.critic)
                self._pair = (version, copied)  # atomic swap for readers
                self.publish_timestamp = now_ns()
            args["version"] = version
        return version

    def fetch(self, track: str = "collector"):
        """Newest consistent (version, params); non-blocking; never a mix."""
        with self._tracer.span(track, "collector/weight_read") as args:
            pair = self._pair
            if pair is None:
                raise RuntimeError("fetch_weights before first publish")
            args["version"] = pair[0]
        return pair


def publish_weights(slot: WeightSlot, params) -> int:
    return slot.publish(params)


def fetch_weights(slot: WeightSlot):
    return slot.fetch()


class RolloutRing:
    """Bounded FIFO of rollout segments (SPSC).

    The producer blocks when full (collector stall), the consumer when
    empty (learner gap); either side aborts with a diagnostic if blocked
    past the deadlock timeout. Capacity bounds consumer-visible staleness
    by capacity + 1 versions.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("ring capacity must be >= 1")
        self.capacity = capacity
        self._items: list = []
        self._cond = threading.Condition()

    def __len__(self) -> int:
        with self._cond:
            return len(self._items)

    def put(self, segment, stop: threading.Event | None = None,
            tracer: Tracer | None = None) -> bool:
        tracer = tracer if tracer is not None else Tracer(enabled=False)
        start = now_ns()
        blocked = False
        with self._cond:
            while len(self._items) >= self.capacity:
                blocked = True
                if stop is not None and stop.is_set():
                    return False
                if not self._cond.wait(timeout=0.05):
                    if (now_ns() - start) / 1e9 > DEADLOCK_TIMEOUT_S:
                        raise PipelineStall(
                            f"collector blocked on full ring "
                            f"(capacity {self.capacity}) for "
                            f"{DEADLOCK_TIMEOUT_S}s"
                        )
            if blocked:
                tracer.record("collector", "collector/stall", start, now_ns())
            self._items.append(segment)
            self._cond.notify_all()
        return True

    def get(self, stop: threading.Event | None = None,
            tracer: Tracer | None = None):
        tracer = tracer if tracer is not None else Tracer(enabled=False)
        start = now_ns()
        blocked = False
        with self._cond:
            while not self._items:
                blocked = True
                if stop is not None and stop.is_set():
                    return None
                if not self._cond.wait(timeout=0.05):
                    if (now_ns() - start) / 1e9 > DEADLOCK_TIMEOUT_S:
                        raise PipelineStall(
                            "learner blocked on empty ring for "
                            f"{DEADLOCK_TIMEOUT_S}s"
                        )
            if blocked:
                tracer.record("learner", "learner/gap", start, now_ns())
            item = self._items.pop(0)
            self._cond.notify_all()
        return item


@dataclass
class RoleError:
    """Error escape hatch from a background role thread."""

    exc: BaseException
    role: str


class ErrorBox:
    def __init__(self):
        self._error: RoleError | None = None
        self._lock = threading.Lock()

    def set(self, role: str, exc: BaseException) -> None:
        with self._lock:
            if self._error is None:
                self._error = RoleError(exc=exc, role=role)

    def raise_if_set(self) -> None:
        with self._lock:
            err = self._error
        if err is not None:
            raise RuntimeError(f"{err.role} role failed: {err.exc!r}") from err.exc
