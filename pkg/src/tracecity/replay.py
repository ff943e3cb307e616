"""Fixture replay: re-timestamp recorded spans and feed them through ingest.

Recorded spans keep their original inter-span deltas; the whole stream is
shifted by a whole number of commit windows so every window boundary maps
1:1 onto a new window. The speed factor only compresses the wall-clock
submission schedule. Immediate mode shifts the stream fully into the past
(every window already closed) and submits one batch.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from .ingest import IngestReceipt, parse_wire_record, span_to_wire
from .model import Span
from .snapshots import DEFAULT_INTERVAL_NS, window_of

BATCH_BUCKET_NS = 250_000_000  # spans submitted together when due within 250 ms


class MalformedFixture(ValueError):
    pass


@dataclass(frozen=True)
class ScheduledBatch:
    submit_at_ns: int
    records: tuple[dict, ...]


def load_fixture(path: str | Path) -> list[Span]:
    """Parse a wire-format fixture file; any bad line is MalformedFixture."""
    spans: list[Span] = []
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            spans.append(parse_wire_record(line))
        except ValueError as exc:
            raise MalformedFixture("line %d: %s" % (line_no, exc))
    return spans


def _shift_span(span: Span, offset_ns: int) -> dict:
    record = span_to_wire(span)
    record["startNs"] = span.start_ns + offset_ns
    record["endNs"] = span.end_ns + offset_ns
    return record


def build_schedule(
    spans: list[Span],
    speed: float = 1.0,
    immediate: bool = False,
    at_ns: int | None = None,
    interval_ns: int = DEFAULT_INTERVAL_NS,
) -> list[ScheduledBatch]:
    """Plan the ingestion: re-timestamped records grouped into timed batches.

    The offset is a multiple of interval_ns, so per-window span counts are
    preserved exactly (window index shifts by a constant). With a finite
    speed, batch k of a stream spanning D ns is submitted at about
    at + k*D/speed; immediate mode lands everything strictly in the past and
    submits at once.
    """
    if not spans:
        return []
    if not immediate and speed <= 0:
        raise ValueError("speed must be positive")
    now = time.time_ns() if at_ns is None else at_ns
    ordered = sorted(spans, key=lambda s: (s.start_ns, s.span_id))
    first_window = window_of(ordered[0].start_ns, interval_ns)
    last_window = window_of(ordered[-1].start_ns, interval_ns)

    if immediate:
        # land the stream so its last window is the newest fully closed one
        shift_windows = window_of(now, interval_ns) - last_window - 1
        offset = shift_windows * interval_ns
        records = tuple(_shift_span(s, offset) for s in ordered)
        return [ScheduledBatch(submit_at_ns=now, records=records)]

    # align the first fixture window onto the currently open window
    shift_windows = window_of(now, interval_ns) - first_window
    offset = shift_windows * interval_ns
    base = ordered[0].start_ns
    batches: list[ScheduledBatch] = []
    bucket: list[dict] = []
    bucket_at = now
    for span in ordered:
        due = now + int((span.start_ns - base) / speed)
        if bucket and due - bucket_at >= BATCH_BUCKET_NS:
            batches.append(ScheduledBatch(bucket_at, tuple(bucket)))
            bucket = []
        if not bucket:
            bucket_at = due
        bucket.append(_shift_span(span, offset))
    if bucket:
        batches.append(ScheduledBatch(bucket_at, tuple(bucket)))
    return batches


def run_schedule(
    schedule: list[ScheduledBatch],
    submit: Callable[[str], IngestReceipt],
    clock: Callable[[], int] = time.time_ns,
    sleeper: Callable[[float], None] = time.sleep,
) -> tuple[int, int]:
    """Submit batches at their due times; returns (accepted, rejected)."""
    accepted = rejected = 0
    for batch in schedule:
        delay_ns = batch.submit_at_ns - clock()
        if delay_ns > 0:
            sleeper(delay_ns / 1e9)
        payload = "\n".join(json.dumps(r, sort_keys=True) for r in batch.records) + "\n"
        receipt = submit(payload)
        accepted += receipt.accepted
        rejected += receipt.rejected
    return accepted, rejected


def window_histogram(spans: Iterable[Span], interval_ns: int = DEFAULT_INTERVAL_NS) -> dict[int, int]:
    """Span count per window index; the replay-conservation oracle's view."""
    histogram: dict[int, int] = {}
    for span in spans:
        idx = window_of(span.start_ns, interval_ns)
        histogram[idx] = histogram.get(idx, 0) + 1
    return histogram
