"""Simulated device boundary: allocation ledger and modeled transfer costs.

The arena stands in for an accelerator. Allocations are bookkept by name;
every data movement sleeps for its modeled duration (so pipeline overlap is
real wall-clock behavior) and emits exactly one trace event carrying both
the modeled and the measured duration.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..traceview import Tracer, now_ns
from .slots import HotColdPair, PackSlot, SlotState, SlotStateError
from .storage import ReplayStorage


class TransferQueueFull(RuntimeError):
    pass


@dataclass
class TransferCostModel:
    fixed_overhead_us: float = 20.0
    us_per_kb: float = 0.01
    sync_penalty_multiplier: float = 3.0

    def cost_us(self, nbytes: int, sync: bool = False) -> float:
        cost = self.fixed_overhead_us + self.us_per_kb * (nbytes / 1024.0)
        if sync:
            cost *= self.sync_penalty_multiplier
        return cost


class DeviceArena:
    def __init__(self, cost_model: TransferCostModel | None = None,
                 queue_capacity: int = 4):
        self.cost_model = cost_model or TransferCostModel()
        self._ledger: dict[str, int] = {}
        self._lock = threading.Lock()
        self.transfer_queue: deque = deque()
        self.queue_capacity = queue_capacity
        self.queue_cond = threading.Condition()

    def alloc(self, name: str, nbytes: int) -> None:
        if nbytes < 0:
            raise ValueError("allocation size must be >= 0")
        with self._lock:
            self._ledger[name] = self._ledger.get(name, 0) + int(nbytes)

    def free(self, name: str) -> None:
        with self._lock:
            self._ledger.pop(name, None)

    def footprint(self) -> dict[str, int]:
        """Exact ledger snapshot, name -> bytes."""
        with self._lock:
            return dict(self._ledger)

    def total_bytes(self) -> int:
        return sum(self.footprint().values())

    def charge(self, nbytes: int, sync: bool = False) -> float:
        """Sleep for the modeled transfer duration; returns modeled us."""
        modeled = self.cost_model.cost_us(nbytes, sync=sync)
        time.sleep(modeled / 1e6)
        return modeled

    def submit(self, job) -> None:
        with self.queue_cond:
            if len(self.transfer_queue) >= self.queue_capacity:
                raise TransferQueueFull(
                    f"transfer queue at capacity {self.queue_capacity}"
                )
            self.transfer_queue.append(job)
            self.queue_cond.notify_all()

    def next_job(self, timeout: float):
        with self.queue_cond:
            if not self.queue_cond.wait_for(
                lambda: len(self.transfer_queue) > 0, timeout
            ):
                return None
            return self.transfer_queue.popleft()


def arena_footprint(arena: DeviceArena) -> dict[str, int]:
    return arena.footprint()


@dataclass
class TransferHandle:
    _done: threading.Event = field(default_factory=threading.Event)

    def resolved(self) -> bool:
        return self._done.is_set()

    def wait(self, timeout: float | None = None) -> bool:
        return self._done.wait(timeout)


@dataclass
class TransferJob:
    slot: PackSlot
    pair: HotColdPair
    handle: TransferHandle


def _perform_transfer(slot: PackSlot, pair: HotColdPair, arena: DeviceArena,
                      tracer: Tracer, track: str, sync: bool) -> None:
    nbytes = slot.nbytes
    with tracer.span(track, "transfer/h2d", bytes=nbytes, slot=slot.id,
                     mode="sync" if sync else "async") as args:
        args["modeled_us"] = arena.charge(nbytes, sync=sync)
        pair.cold.buffer[:] = slot.buffer
    pair.mark_cold_valid(slot.ready_signal_time)
    slot.transition(SlotState.FREE)


def submit_transfer(slot: PackSlot, pair: HotColdPair, arena: DeviceArena,
                    mode: str, tracer: Tracer | None = None) -> TransferHandle:
    """Move a READY pack slot into the cold device slot.

    async: enqueue for the transfer agent and return immediately; the
    handle resolves when the copy lands. sync (the pageable path): perform
    the transfer inline, blocking the caller for the penalized cost.
    """
    tracer = tracer if tracer is not None else Tracer(enabled=False)
    if slot.state is not SlotState.READY:
        raise SlotStateError(
            f"submit_transfer requires READY, slot {slot.id} is "
            f"{slot.state.value}"
        )
    handle = TransferHandle()
    if mode == "sync":
        slot.transition(SlotState.TRANSFERRING)
        # pageable path runs on the caller (learner) timeline
        _perform_transfer(slot, pair, arena, tracer, "learner", sync=True)
        handle._done.set()
    elif mode == "async":
        arena.submit(TransferJob(slot=slot, pair=pair, handle=handle))
    else:
        raise ValueError("mode must be 'async' or 'sync'")
    return handle


class TransferAgent:
    """Background role that drains the arena queue onto the cold slot.

    Transfers wait until the learner has invalidated the cold slot (batch
    boundary), then sleep the modeled cost and land the batch.
    """

    def __init__(self, arena: DeviceArena, tracer: Tracer | None = None):
        self.arena = arena
        self.tracer = tracer if tracer is not None else Tracer(enabled=False)
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, name="transfer-agent",
                                        daemon=True)

    def start(self) -> None:
        self._thread.start()

    def stop(self, timeout: float = 5.0) -> None:
        self._stop.set()
        with self.arena.queue_cond:
            self.arena.queue_cond.notify_all()
        if self._thread.is_alive():
            self._thread.join(timeout)

    def drain_one(self, timeout: float = 0.1) -> bool:
        """Process one queued transfer inline (deterministic mode)."""
        job = self.arena.next_job(timeout)
        if job is None:
            return False
        self._execute(job)
        return True

    def _run(self) -> None:
        while not self._stop.is_set():
            job = self.arena.next_job(timeout=0.05)
            if job is None:
                continue
            self._execute(job)

    def _execute(self, job: TransferJob) -> None:
        with self.tracer.span("transfer", "transfer/h2d_submit",
                              slot=job.slot.id):
            job.slot.transition(SlotState.TRANSFERRING)
        while not job.pair.wait_cold_writable(timeout=0.05):
            if self._stop.is_set():
                return
        _perform_transfer(job.slot, job.pair, self.arena, self.tracer,
                          "transfer", sync=False)
        job.handle._done.set()


class DeviceReplayCache:
    """Variant C/B device-resident replay mirror with lazy row sync.

    New rows appended since the last sync are copied in on the learner's
    sampling path; the batch is then gathered device-side. The cache's
    capacity-scaled footprint lives in the arena ledger as "replay_cache".
    """

    LEDGER_NAME = "replay_cache"

    def __init__(self, storage: ReplayStorage, arena: DeviceArena):
        self._mirror = np.zeros_like(storage._data)
        self._synced_head = 0
        arena.alloc(self.LEDGER_NAME, storage.capacity * storage.row_bytes)

    def lazy_sync_and_gather(
        self,
        storage: ReplayStorage,
        indices: np.ndarray,
        arena: DeviceArena,
        tracer: Tracer | None = None,
        track: str = "learner",
    ) -> np.ndarray:
        """Sync appended rows, then gather the batch at absolute indices."""
        tracer = tracer if tracer is not None else Tracer(enabled=False)
        indices = np.asarray(indices, dtype=np.int64)
        lo, hi = storage.valid_range()
        if len(indices) and (indices.min() < lo or indices.max() >= hi):
            raise IndexError(f"indices outside snapshot range [{lo}, {hi})")

        new_lo = max(self._synced_head, lo)
        n_new = storage.write_head - new_lo
        if n_new > 0:
            nbytes = n_new * storage.row_bytes
            with tracer.span(track, "replay/h2d_lazy_sync",
                             rows=int(n_new), bytes=int(nbytes)) as args:
                args["modeled_us"] = arena.charge(nbytes)
                abs_ids = np.arange(new_lo, storage.write_head)
                slots = abs_ids % storage.capacity
                self._mirror[slots] = storage._data[slots]
            self._synced_head = storage.write_head

        with tracer.span(track, "learner/replay_sample",
                         rows=len(indices)) as args:
            batch_bytes = len(indices) * storage.row_bytes
            args["modeled_us"] = arena.charge(batch_bytes)
            batch = self._mirror[indices % storage.capacity].copy()
        return batch
