"""Human-readable and CSV renderings of cycle/overhead analyses."""

from __future__ import annotations

import csv
import io

from .analyze import COMPONENTS, CycleReport, OverheadReport

# Timing context from the A100 reference system these analyses mirror;
# printed for orientation only, never asserted against desk-scale runs.
A100_REFERENCE = {
    "mean_cycle_ms": 136.10,
    "counted_overhead_ms": 15.82,
    "counted_share": 0.1162,
    "replay_placement_ratio": 2.34,
}


def render_cycle_table(report: CycleReport) -> str:
    out = io.StringIO()
    out.write("cycle attribution (means over retained cycles)\n")
    out.write(f"  cycles total:    {len(report.records)}\n")
    out.write(f"  warmup dropped:  {report.warmup_dropped}\n")
    out.write(f"  retained:        {report.retained_count}\n")
    out.write(f"  mean cycle:      {report.mean('cycle_ms'):.3f} ms\n")
    out.write(f"  mean learner:    {report.mean('learner_ms'):.3f} ms\n")
    out.write(f"  mean collector:  {report.mean('collector_active_ms'):.3f} ms\n")
    out.write(f"  mean overlap:    {report.mean('overlap_ms'):.3f} ms\n")
    col = report.mean("collector_active_ms")
    if col > 0:
        share = report.mean("overlap_ms") / col
        out.write(f"  overlap/collector-active: {share:.2%}\n")
    out.write("  components (ms/cycle): ")
    out.write(
        "  ".join(
            f"{label}={report.mean_component(label):.3f}" for label in COMPONENTS
        )
    )
    out.write("\n")
    ref = A100_REFERENCE["mean_cycle_ms"]
    out.write(f"  [A100 reference, different hardware: mean cycle {ref:.2f} ms]\n")
    return out.getvalue()


def render_overhead(overhead: OverheadReport) -> str:
    out = io.StringIO()
    out.write("counted overhead per retained cycle\n")
    out.write(f"  data movement:   {overhead.data_movement_ms:.3f} ms\n")
    out.write(f"  weight sync:     {overhead.weight_sync_ms:.3f} ms\n")
    out.write(f"  boundary wait:   {overhead.boundary_wait_ms:.3f} ms\n")
    out.write(f"  counted total:   {overhead.counted_total_ms:.3f} ms "
              f"({overhead.counted_share_of_cycle:.2%} of cycle)\n")
    out.write(f"  signal-ready context (excluded): "
              f"{overhead.signal_ready_ms:.3f} ms\n")
    out.write(
        f"  [A100 reference, different hardware: "
        f"{A100_REFERENCE['counted_overhead_ms']:.2f} ms, "
        f"{A100_REFERENCE['counted_share']:.2%}]\n"
    )
    return out.getvalue()


def write_cycle_csv(report: CycleReport, path) -> None:
    """Machine-readable per-cycle rows (all cycles; retained flag included)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [
            "cycle", "retained", "cycle_ms", "learner_ms",
            "collector_active_ms", "overlap_ms", "replay_consumption_ms",
            "learner_blocked_ms",
        ] + [f"comp_{label.lower()}_ms" for label in COMPONENTS]
        writer.writerow(header)
        for i, rec in enumerate(report.records):
            row = [
                i,
                int(i >= report.warmup_dropped),
                f"{rec.cycle_ms:.6f}",
                f"{rec.learner_ms:.6f}",
                f"{rec.collector_active_ms:.6f}",
                f"{rec.overlap_ms:.6f}",
                f"{rec.replay_consumption_ms:.6f}",
                f"{rec.learner_blocked_ms:.6f}",
            ] + [f"{rec.components_ms.get(label, 0.0):.6f}" for label in COMPONENTS]
            writer.writerow(row)
