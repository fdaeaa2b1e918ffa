"""Cycle segmentation, per-cycle attribution, and overhead grouping.

A learner cycle runs from the end of one learner/weight_sync_write event to
the end of the next. The first five cycles are warmup and are dropped from
every reported mean. An event belongs to the cycle containing its end
timestamp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .tracer import TraceEvent

WARMUP_CYCLES = 5

# Panel-style component means: display label -> event names summed per cycle.
COMPONENTS = {
    "Lrn": ("learner/update",),
    "Env": ("collector/env_step",),
    "Pack": ("collector/pack",),
    "Inf": ("collector/actor_inference",),
    "H2D": ("transfer/h2d",),
    "Add": ("collector/replay_add",),
    "Sync": ("learner/weight_sync_write", "collector/weight_read"),
}

DATA_MOVEMENT = (
    "collector/pack",
    "transfer/h2d_submit",
    "transfer/h2d",
    "learner/h2d_wait",
    "learner/replay_sample",
    "replay/h2d_lazy_sync",
)
WEIGHT_SYNC = ("learner/weight_sync_write", "collector/weight_read")
BOUNDARY_WAIT = ("collector/stall", "learner/gap")


def _union(intervals: list[tuple[int, int]]) -> list[tuple[int, int]]:
    if not intervals:
        return []
    merged = []
    for start, end in sorted(intervals):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def _measure(intervals: list[tuple[int, int]]) -> int:
    return sum(end - start for start, end in intervals)


def _intersect(a: list[tuple[int, int]], b: list[tuple[int, int]]) -> int:
    """Measure of the intersection of two interval unions."""
    i = j = 0
    total = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            total += hi - lo
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return total


@dataclass
class CycleRecord:
    start_ns: int
    end_ns: int
    sums_ms: dict[str, float]
    learner_ms: float
    collector_active_ms: float
    overlap_ms: float
    components_ms: dict[str, float]
    replay_consumption_ms: float
    learner_blocked_ms: float

    @property
    def cycle_ms(self) -> float:
        return (self.end_ns - self.start_ns) / 1e6


@dataclass
class CycleReport:
    records: list[CycleRecord]
    warmup_dropped: int = WARMUP_CYCLES

    @property
    def retained(self) -> list[CycleRecord]:
        return self.records[self.warmup_dropped:]

    @property
    def retained_count(self) -> int:
        return len(self.retained)

    def mean(self, attr: str) -> float:
        rows = self.retained
        return sum(getattr(r, attr) for r in rows) / len(rows)

    def mean_component(self, label: str) -> float:
        rows = self.retained
        return sum(r.components_ms.get(label, 0.0) for r in rows) / len(rows)

    def mean_sum(self, name: str) -> float:
        rows = self.retained
        return sum(r.sums_ms.get(name, 0.0) for r in rows) / len(rows)


@dataclass
class OverheadReport:
    data_movement_ms: float
    weight_sync_ms: float
    boundary_wait_ms: float
    signal_ready_ms: float
    mean_cycle_ms: float

    @property
    def counted_total_ms(self) -> float:
        return self.data_movement_ms + self.weight_sync_ms + self.boundary_wait_ms

    @property
    def counted_share_of_cycle(self) -> float:
        return self.counted_total_ms / self.mean_cycle_ms


def segment_cycles(events: list[TraceEvent]) -> list[tuple[int, int]]:
    """End-to-end intervals between consecutive weight-publication events.

    Requires at least 7 such events so at least one cycle survives the
    five-cycle warmup drop.
    """
    ends = sorted(
        e.ts_end for e in events if e.name == "learner/weight_sync_write"
    )
    if len(ends) < WARMUP_CYCLES + 2:
        raise ValueError(
            f"need >= {WARMUP_CYCLES + 2} weight_sync_write events to retain "
            f"a cycle, got {len(ends)}"
        )
    return [(ends[i], ends[i + 1]) for i in range(len(ends) - 1)]


def attribute_cycles(
    events: list[TraceEvent], cycles: list[tuple[int, int]]
) -> CycleReport:
    """Per-cycle sums by event name, collector-active time, and overlap."""
    records = []
    for start, end in cycles:
        assigned = [e for e in events if start < e.ts_end <= end]
        sums_ns: dict[str, float] = {}
        for e in assigned:
            sums_ns[e.name] = sums_ns.get(e.name, 0.0) + e.duration_ns

        collector_iv = _union(
            [(e.ts_start, e.ts_end) for e in assigned
             if e.track == "collector" and e.name != "collector/stall"]
        )
        learner_iv = _union(
            [(e.ts_start, e.ts_end) for e in assigned
             if e.name == "learner/update"]
        )
        overlap_ns = _intersect(collector_iv, learner_iv)

        components = {}
        for label, names in COMPONENTS.items():
            total = sum(sums_ns.get(n, 0.0) for n in names)
            if label == "Lrn":
                pad = sum(e.args.get("synthetic_pad_us", 0.0) * 1000.0
                          for e in assigned if e.name == "learner/update")
                total -= pad
            components[label] = total / 1e6

        replay_consumption_ns = sum(
            e.duration_ns for e in assigned
            if e.track == "learner"
            and e.name in ("learner/replay_sample", "replay/h2d_lazy_sync",
                           "collector/pack")
        )
        learner_blocked_ns = sum(
            e.duration_ns for e in assigned
            if e.track == "learner"
            and e.name in ("learner/h2d_wait", "learner/gap", "transfer/h2d")
        )

        records.append(
            CycleRecord(
                start_ns=start,
                end_ns=end,
                sums_ms={k: v / 1e6 for k, v in sums_ns.items()},
                learner_ms=_measure(learner_iv) / 1e6,
                collector_active_ms=_measure(collector_iv) / 1e6,
                overlap_ms=overlap_ns / 1e6,
                components_ms=components,
                replay_consumption_ms=replay_consumption_ns / 1e6,
                learner_blocked_ms=learner_blocked_ns / 1e6,
            )
        )
    return CycleReport(records=records)


def overhead_report(report: CycleReport, events=None) -> OverheadReport:
    """Group counted overheads per retained cycle; signal-ready context is
    reported separately and excluded from the counted total."""

    def mean_group(names) -> float:
        return sum(report.mean_sum(n) for n in names)

    return OverheadReport(
        data_movement_ms=mean_group(DATA_MOVEMENT),
        weight_sync_ms=mean_group(WEIGHT_SYNC),
        boundary_wait_ms=mean_group(BOUNDARY_WAIT),
        signal_ready_ms=report.mean_sum("signal/ready"),
        mean_cycle_ms=report.mean("cycle_ms"),
    )
