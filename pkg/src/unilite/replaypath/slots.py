"""Pack slots and hot/cold device batch slots.

Pack slots are the two shared host-side staging buffers between the
packer and the transfer agent; their state machine only ever moves
FREE -> PACKING -> READY -> TRANSFERRING -> FREE. Device batch slots are
learner-owned: the learner reads hot, transfers land in cold, and a swap
exchanges the roles at a batch handoff.
"""

from __future__ import annotations

import threading
import time
from enum import Enum

import numpy as np

from ..traceview import Tracer, now_ns


class SlotState(Enum):
    FREE = "free"
    PACKING = "packing"
    READY = "ready"
    TRANSFERRING = "transferring"


class SlotStateError(RuntimeError):
    """An illegal slot transition; signals a pipeline scheduling bug."""


_LEGAL = {
    SlotState.FREE: SlotState.PACKING,
    SlotState.PACKING: SlotState.READY,
    SlotState.READY: SlotState.TRANSFERRING,
    SlotState.TRANSFERRING: SlotState.FREE,
}


class PackSlot:
    def __init__(self, slot_id: int, batch_rows: int, row_width: int,
                 memory_class: str = "pinned",
                 cond: threading.Condition | None = None):
        if memory_class not in ("pinned", "pageable"):
            raise ValueError("memory_class must be pinned or pageable")
        self.id = slot_id
        self.buffer = np.zeros((batch_rows, row_width), dtype=np.float32)
        self.memory_class = memory_class
        self.ready_signal_time: int = 0
        self._state = SlotState.FREE
        self._cond = cond or threading.Condition()

    @property
    def state(self) -> SlotState:
        return self._state

    def transition(self, new: SlotState) -> None:
        with self._cond:
            if _LEGAL[self._state] is not new:
                raise SlotStateError(
                    f"pack slot {self.id}: illegal transition "
                    f"{self._state.value} -> {new.value}"
                )
            self._state = new
            self._cond.notify_all()

    def wait_for(self, state: SlotState, timeout: float | None = None) -> bool:
        with self._cond:
            return self._cond.wait_for(lambda: self._state is state, timeout)

    @property
    def nbytes(self) -> int:
        return int(self.buffer.nbytes)


class PackSlotPair:
    """The two shared pack slots; at most one may be PACKING at a time."""

    def __init__(self, batch_rows: int, row_width: int,
                 memory_class: str = "pinned"):
        self._cond = threading.Condition()
        self.slots = [
            PackSlot(i, batch_rows, row_width, memory_class, cond=self._cond)
            for i in range(2)
        ]
        self.packing_lock = threading.Lock()

    def acquire_free(self, timeout: float | None = None,
                     stop=None) -> PackSlot | None:
        """Block until some slot is FREE; None on timeout or stop request."""
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cond:
            while True:
                for slot in self.slots:
                    if slot.state is SlotState.FREE:
                        return slot
                if stop is not None and stop.is_set():
                    return None
                wait = 0.05
                if deadline is not None:
                    wait = deadline - time.monotonic()
                    if wait <= 0:
                        return None
                    wait = min(wait, 0.05)
                self._cond.wait(timeout=wait)


def pack(slot: PackSlot, rows: np.ndarray, pair: PackSlotPair | None = None,
         tracer: Tracer | None = None, track: str = "collector") -> None:
    """Copy a sampled row block into a FREE slot and mark it READY."""
    tracer = tracer if tracer is not None else Tracer(enabled=False)
    lock = pair.packing_lock if pair is not None else threading.Lock()
    if not lock.acquire(blocking=False):
        raise SlotStateError("another slot is already PACKING")
    try:
        slot.transition(SlotState.PACKING)
        with tracer.span(track, "collector/pack",
                         slot=slot.id, bytes=int(rows.nbytes)):
            slot.buffer[: len(rows)] = rows
        slot.ready_signal_time = now_ns()
        slot.transition(SlotState.READY)
    finally:
        lock.release()


class DeviceBatchSlot:
    def __init__(self, role: str, batch_rows: int, row_width: int):
        if role not in ("hot", "cold"):
            raise ValueError("role must be hot or cold")
        self.role = role
        self.buffer = np.zeros((batch_rows, row_width), dtype=np.float32)
        self.valid = False
        self.staged_ready_ns = 0  # pack READY time of the staged batch


class HotColdPair:
    """Learner-owned pair; the transfer agent only writes the cold slot."""

    def __init__(self, batch_rows: int, row_width: int):
        self.hot = DeviceBatchSlot("hot", batch_rows, row_width)
        self.cold = DeviceBatchSlot("cold", batch_rows, row_width)
        self.cond = threading.Condition()

    def swap_hot_cold(self) -> None:
        """Exchange roles atomically at a batch handoff.

        Requires a valid cold slot; the previous hot becomes the (invalid)
        cold, ready for the next transfer.
        """
        with self.cond:
            if not self.cold.valid:
                raise SlotStateError("cold slot invalid: prefetch incomplete")
            self.hot, self.cold = self.cold, self.hot
            self.hot.role = "hot"
            self.cold.role = "cold"
            self.cold.valid = False
            self.cond.notify_all()

    def wait_cold_valid(self, timeout: float) -> bool:
        with self.cond:
            return self.cond.wait_for(lambda: self.cold.valid, timeout)

    def wait_cold_writable(self, timeout: float) -> bool:
        with self.cond:
            return self.cond.wait_for(lambda: not self.cold.valid, timeout)

    def mark_cold_valid(self, staged_ready_ns: int) -> None:
        with self.cond:
            self.cold.staged_ready_ns = staged_ready_ns
            self.cold.valid = True
            self.cond.notify_all()


def swap_hot_cold(pair: HotColdPair) -> None:
    pair.swap_hot_cold()
