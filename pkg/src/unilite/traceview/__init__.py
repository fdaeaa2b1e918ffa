"""Trace capture, chrome-trace export, and cycle-level attribution."""

from .analyze import (
    BOUNDARY_WAIT,
    COMPONENTS,
    DATA_MOVEMENT,
    WARMUP_CYCLES,
    WEIGHT_SYNC,
    CycleRecord,
    CycleReport,
    OverheadReport,
    attribute_cycles,
    overhead_report,
    segment_cycles,
)
from .export import export_chrome_json, parse_chrome_json
from .reports import (
    A100_REFERENCE,
    render_cycle_table,
    render_overhead,
    write_cycle_csv,
)
from .tracer import EVENT_REGISTRY, NullTracer, TraceEvent, Tracer, now_ns

__all__ = [
    "A100_REFERENCE",
    "BOUNDARY_WAIT",
    "COMPONENTS",
    "DATA_MOVEMENT",
    "EVENT_REGISTRY",
    "NullTracer",
    "CycleRecord",
    "CycleReport",
    "OverheadReport",
    "TraceEvent",
    "Tracer",
    "WARMUP_CYCLES",
    "WEIGHT_SYNC",
    "attribute_cycles",
    "export_chrome_json",
    "now_ns",
    "overhead_report",
    "parse_chrome_json",
    "render_cycle_table",
    "render_overhead",
    "segment_cycles",
    "write_cycle_csv",
]
