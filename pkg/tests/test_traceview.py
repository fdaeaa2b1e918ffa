import json

import numpy as np
import pytest

from unilite.traceview import (
    TraceEvent,
    Tracer,
    attribute_cycles,
    export_chrome_json,
    overhead_report,
    parse_chrome_json,
    segment_cycles,
)

MS = 1_000_000  # ns


def sync_event(end_ns, dur_ns=0):
    return TraceEvent("learner", "learner/weight_sync_write",
                      end_ns - dur_ns, end_ns)


class TestTracer:
    def test_record_and_snapshot(self):
        tracer = Tracer()
        tracer.record("learner", "learner/update", 0, 1000)
        events = tracer.events()
        assert len(events) == 1
        assert events[0].ts_start == 0 and events[0].ts_end == 1000

    def test_unregistered_name(self):
        tracer = Tracer()
        with pytest.raises(ValueError, match="unregistered"):
            tracer.record("learner", "learner/everything", 0, 1)

    def test_overlap_on_different_tracks_allowed(self):
        tracer = Tracer()
        tracer.record("learner", "learner/update", 0, 1000)
        tracer.record("collector", "collector/env_step", 500, 800)
        assert tracer.count() == 2

    def test_single_track_overlap_asserted(self):
        tracer = Tracer()
        tracer.record("learner", "learner/update", 0, 1000)
        with pytest.raises(RuntimeError, match="overlapping"):
            tracer.record("learner", "learner/gap", 500, 700)

    def test_span_context(self):
        tracer = Tracer()
        with tracer.span("collector", "collector/env_step", n=3):
            pass
        ev = tracer.events()[0]
        assert ev.ts_end >= ev.ts_start
        assert ev.args["n"] == 3

    def test_disabled_tracer(self):
        tracer = Tracer(enabled=False)
        tracer.record("learner", "learner/update", 0, 1)
        with tracer.span("collector", "collector/env_step"):
            pass
        assert tracer.count() == 0


class TestExport:
    def test_empty_trace(self, tmp_path):
        path = tmp_path / "trace.json"
        export_chrome_json([], path)
        assert path.read_text() == "[]"

    def test_unit_conversion(self, tmp_path):
        path = tmp_path / "trace.json"
        export_chrome_json(
            [TraceEvent("learner", "learner/update", 0, 1000)], path
        )
        raw = json.loads(path.read_text())
        assert raw[0]["ts"] == 0
        assert raw[0]["dur"] == 1
        assert raw[0]["ph"] == "X"
        assert raw[0]["pid"] == 1

    def test_round_trip_lossless(self, tmp_path):
        rng = np.random.default_rng(0)
        events = []
        clock = {"learner": 0, "collector": 0}
        for _ in range(50):
            track = "learner" if rng.random() < 0.5 else "collector"
            name = ("learner/update" if track == "learner"
                    else "collector/env_step")
            start = clock[track] + int(rng.integers(0, 10_000))
            end = start + int(rng.integers(1, 100_000))
            clock[track] = end
            events.append(TraceEvent(track, name, start, end,
                                     {"k": int(rng.integers(0, 9))}))
        path = tmp_path / "trace.json"
        export_chrome_json(events, path)
        parsed = parse_chrome_json(path)
        assert len(parsed) == len(events)
        for a, b in zip(events, parsed):
            assert a.track == b.track
            assert a.name == b.name
            assert a.ts_start == b.ts_start
            assert a.ts_end == b.ts_end
            assert a.args == b.args


class TestSegmentCycles:
    def test_equal_cycles(self):
        events = [sync_event(i * 100 * MS) for i in range(12)]
        cycles = segment_cycles(events)
        assert len(cycles) == 11
        report = attribute_cycles(events, cycles)
        assert report.retained_count == 6
        assert report.mean("cycle_ms") == pytest.approx(100.0)

    def test_too_few_syncs(self):
        events = [sync_event(i * 100 * MS) for i in range(6)]
        with pytest.raises(ValueError, match="weight_sync_write"):
            segment_cycles(events)

    def test_cycle_count_identity(self):
        for n in (7, 9, 20):
            events = [sync_event(i * 50 * MS) for i in range(n)]
            cycles = segment_cycles(events)
            assert len(cycles) == n - 1
            assert attribute_cycles(events, cycles).retained_count == n - 6


class TestAttribution:
    def test_overlap_interval_arithmetic(self):
        # learner update [0, 80], collector active [10, 70] -> overlap 60
        events = [
            sync_event(0),
            TraceEvent("learner", "learner/update", 0, 80 * MS),
            TraceEvent("collector", "collector/env_step", 10 * MS, 70 * MS),
            sync_event(100 * MS),
        ]
        # pad to satisfy the warmup requirement
        for i in range(2, 8):
            events.append(sync_event(i * 100 * MS))
        cycles = segment_cycles(events)
        report = attribute_cycles(events, cycles)
        first = report.records[0]
        assert first.overlap_ms == pytest.approx(60.0)
        assert first.collector_active_ms == pytest.approx(60.0)
        assert first.overlap_ms / first.collector_active_ms == 1.0

    def test_disjoint_zero_overlap(self):
        events = [
            sync_event(0),
            TraceEvent("collector", "collector/env_step", 1 * MS, 20 * MS),
            TraceEvent("learner", "learner/update", 30 * MS, 90 * MS),
        ]
        for i in range(1, 8):
            events.append(sync_event(i * 100 * MS))
        report = attribute_cycles(events, segment_cycles(events))
        assert report.records[0].overlap_ms == 0.0

    def test_overlap_matches_bucket_oracle(self):
        # randomized synthetic traces vs a discretized per-bucket oracle
        rng = np.random.default_rng(7)
        for trial in range(20):
            events = [sync_event(0)]
            horizon = 1_000_000  # 1 ms in ns
            t = 1000
            while t < horizon - 2000:
                dur = int(rng.integers(500, 5000))
                events.append(TraceEvent(
                    "collector", "collector/env_step", t, min(t + dur, horizon)
                ))
                t += dur + int(rng.integers(0, 3000))
            t = 500
            while t < horizon - 2000:
                dur = int(rng.integers(1000, 8000))
                events.append(TraceEvent(
                    "learner", "learner/update", t, min(t + dur, horizon - 1)
                ))
                t += dur + int(rng.integers(0, 4000))
            events.append(sync_event(horizon))
            for i in range(2, 8):
                events.append(sync_event(i * horizon))
            report = attribute_cycles(events, segment_cycles(events))
            rec = report.records[0]

            bucket = np.zeros(horizon, dtype=np.uint8)
            for e in events:
                if e.name == "collector/env_step":
                    bucket[e.ts_start:e.ts_end] |= 1
                elif e.name == "learner/update":
                    bucket[e.ts_start:e.ts_end] |= 2
            oracle_overlap = int(np.sum(bucket == 3))
            assert rec.overlap_ms * 1e6 == pytest.approx(oracle_overlap, abs=1)

    def test_overlap_bounded_by_min(self):
        rng = np.random.default_rng(8)
        events = [sync_event(0)]
        t = 0
        for _ in range(10):
            start = t + int(rng.integers(0, 1000))
            end = start + int(rng.integers(1, 5000))
            events.append(TraceEvent("collector", "collector/env_step", start, end))
            t = end
        events.append(TraceEvent("learner", "learner/update", 100, 30_000))
        for i in range(1, 8):
            events.append(sync_event(i * 100 * MS))
        report = attribute_cycles(events, segment_cycles(events))
        rec = report.records[0]
        assert rec.overlap_ms <= min(rec.learner_ms, rec.collector_active_ms) + 1e-12

    def test_component_sums_bounded_by_cycle(self):
        events = [sync_event(0)]
        events.append(TraceEvent("collector", "collector/env_step", 0, 40 * MS))
        events.append(TraceEvent("collector", "collector/pack", 40 * MS, 60 * MS))
        for i in range(1, 8):
            events.append(sync_event(i * 100 * MS))
        report = attribute_cycles(events, segment_cycles(events))
        rec = report.records[0]
        per_track_total = rec.sums_ms.get("collector/env_step", 0) + \
            rec.sums_ms.get("collector/pack", 0)
        assert per_track_total <= rec.cycle_ms


def golden_trace():
    """Synthetic per-cycle timeline built from the reference component
    durations: pack 6.30, h2d 3.13, h2d_submit 0.355, replay_sample 0.23,
    h2d_wait 0.055, write 0.94, read 3.85, stall 0.50, gap 0.46 (ms) in a
    136.10 ms cycle."""
    events = []
    cycle = 136.10
    n_cycles = 11
    for k in range(n_cycles + 1):
        base = k * cycle
        if k > 0:
            # activity inside cycle k-1, placed between the two sync ends
            def ev(track, name, offset_ms, dur_ms, **args):
                start = int((base - cycle + offset_ms) * MS)
                events.append(TraceEvent(track, name, start,
                                         start + int(dur_ms * MS), args))

            ev("learner", "learner/gap", 1.0, 0.46)
            ev("learner", "learner/h2d_wait", 2.0, 0.055)
            ev("learner", "learner/replay_sample", 3.0, 0.23)
            ev("learner", "learner/update", 4.0, 110.0)
            ev("collector", "collector/weight_read", 5.0, 3.85)
            ev("collector", "collector/env_step", 10.0, 40.0)
            ev("collector", "collector/pack", 55.0, 6.30)
            ev("collector", "collector/stall", 70.0, 0.50)
            ev("transfer", "transfer/h2d_submit", 62.0, 0.355)
            ev("transfer", "transfer/h2d", 63.0, 3.13)
            ev("signal", "signal/ready", 67.0, 30.0)
        # the sync event whose end closes cycle k-1
        events.append(TraceEvent(
            "learner", "learner/weight_sync_write",
            int(base * MS - 0.94 * MS), int(base * MS),
        ))
    return events


class TestOverheadReport:
    def test_simple_arithmetic(self):
        events = [sync_event(0)]
        def ev(track, name, offset_ms, dur_ms):
            start = int(offset_ms * MS)
            events.append(TraceEvent(track, name, start, start + int(dur_ms * MS)))
        for k in range(10):
            base = k * 100.0
            ev("collector", "collector/pack", base + 10, 6.0)
            ev("transfer", "transfer/h2d", base + 20, 3.0)
            ev("collector", "collector/weight_read", base + 30, 5.0)
            ev("collector", "collector/stall", base + 40, 1.0)
            events.append(sync_event(int((base + 100) * MS)))
        report = attribute_cycles(events, segment_cycles(events))
        oh = overhead_report(report)
        assert oh.counted_total_ms == pytest.approx(15.0, abs=1e-9)
        assert oh.counted_share_of_cycle == pytest.approx(0.15, abs=1e-9)

    def test_zero_overhead(self):
        events = [sync_event(i * 100 * MS) for i in range(12)]
        report = attribute_cycles(events, segment_cycles(events))
        oh = overhead_report(report)
        assert oh.counted_total_ms == 0.0

    def test_golden_reference_grouping(self):
        events = golden_trace()
        report = attribute_cycles(events, segment_cycles(events))
        oh = overhead_report(report)
        assert oh.data_movement_ms == pytest.approx(10.07, abs=1e-6)
        assert oh.weight_sync_ms == pytest.approx(4.79, abs=1e-6)
        assert oh.boundary_wait_ms == pytest.approx(0.96, abs=1e-6)
        assert oh.counted_total_ms == pytest.approx(15.82, abs=1e-6)
        assert oh.counted_share_of_cycle == pytest.approx(0.1162, abs=1e-4)
        assert oh.signal_ready_ms == pytest.approx(30.0, abs=1e-6)
        assert oh.mean_cycle_ms == pytest.approx(136.10, abs=1e-6)
