"""Chrome trace-event JSON export and the matching parser.

Complete ("X") events with microsecond ts/dur, fractional to preserve the
nanosecond clock; pid is fixed at 1 and tid indexes the track order. The
track name rides in args so a parse round-trip is lossless.
"""

from __future__ import annotations

import json
from pathlib import Path

from .tracer import TraceEvent


def export_chrome_json(events: list[TraceEvent], path) -> None:
    tracks: list[str] = []
    for e in events:
        if e.track not in tracks:
            tracks.append(e.track)
    payload = []
    for e in events:
        args = {"track": e.track}
        args.update(e.args)
        payload.append(
            {
                "name": e.name,
                "ph": "X",
                "ts": e.ts_start / 1000.0,
                "dur": (e.ts_end - e.ts_start) / 1000.0,
                "pid": 1,
                "tid": tracks.index(e.track),
                "args": args,
            }
        )
    Path(path).write_text(json.dumps(payload))


def parse_chrome_json(path) -> list[TraceEvent]:
    raw = json.loads(Path(path).read_text())
    events = []
    for item in raw:
        if item.get("ph") != "X":
            continue
        args = dict(item.get("args", {}))
        track = args.pop("track", f"tid{item.get('tid', 0)}")
        ts_start = round(item["ts"] * 1000.0)
        ts_end = ts_start + round(item["dur"] * 1000.0)
        events.append(
            TraceEvent(track=track, name=item["name"], ts_start=ts_start,
                       ts_end=ts_end, args=args)
        )
    return events
