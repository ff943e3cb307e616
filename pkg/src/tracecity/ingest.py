"""Span ingestion: wire-record parsing and the per-system append-only store.

Accepted spans land in append-only segment files, one per (system, window),
under ``<data_dir>/<system>/segments/<window_index>.ndjson``. The in-memory
index (span counts, seen timestamps, recent span ids for duplicate
detection) is rebuilt on startup by scanning the segments, so the store is
crash-safe without any database.
"""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .model import Span, validate_span
from .snapshots import DEFAULT_INTERVAL_NS, WindowId, window_of

DEFAULT_MAX_PAYLOAD = 16 * 1024 * 1024
DUP_WINDOW_COUNT = 10

WIRE_REQUIRED_KEYS = (
    "traceId",
    "spanId",
    "startNs",
    "endNs",
    "appName",
    "appInstance",
    "fqn",
    "host",
)
WIRE_OPTIONAL_KEYS = ("parentSpanId",)
_ALLOWED_KEYS = set(WIRE_REQUIRED_KEYS) | set(WIRE_OPTIONAL_KEYS)


class UnknownSystem(KeyError):
    pass


class PayloadTooLarge(ValueError):
    pass


class UnknownEncoding(ValueError):
    pass


@dataclass(frozen=True)
class SystemInfo:
    system_id: str
    display_name: str
    first_seen_ns: int
    last_seen_ns: int
    span_count: int


@dataclass(frozen=True)
class IngestReceipt:
    accepted: int
    rejected: int
    rejection_reasons: tuple[tuple[int, str], ...]


def parse_wire_record(line: str) -> Span:
    """Parse one newline-delimited wire record into a Span.

    Raises ValueError with a human-readable reason on any malformation;
    key set is strict. An all-zero parentSpanId means "no parent".
    """
    try:
        raw = json.loads(line)
    except json.JSONDecodeError:
        raise ValueError("invalid json")
    if not isinstance(raw, dict):
        raise ValueError("record must be an object")
    unknown = set(raw) - _ALLOWED_KEYS
    if unknown:
        raise ValueError("unexpected key: %s" % sorted(unknown)[0])
    missing = [k for k in WIRE_REQUIRED_KEYS if k not in raw]
    if missing:
        raise ValueError("missing key: %s" % missing[0])
    for key in ("traceId", "spanId", "appName", "appInstance", "fqn", "host"):
        if not isinstance(raw[key], str):
            raise ValueError("%s must be a string" % key)
    for key in ("startNs", "endNs"):
        if not isinstance(raw[key], int) or isinstance(raw[key], bool):
            raise ValueError("%s must be an integer" % key)
        if raw[key] < 0:
            raise ValueError("%s must be non-negative" % key)
    parent = raw.get("parentSpanId")
    if parent is not None:
        if not isinstance(parent, str):
            raise ValueError("parentSpanId must be a string")
        if len(parent) == 16 and set(parent) == {"0"}:
            parent = None
    span = Span(
        trace_id=raw["traceId"],
        span_id=raw["spanId"],
        parent_span_id=parent,
        start_ns=raw["startNs"],
        end_ns=raw["endNs"],
        app_name=raw["appName"],
        app_instance=raw["appInstance"],
        fqn=raw["fqn"],
        host=raw["host"],
    )
    reason = validate_span(span)
    if reason is not None:
        raise ValueError(reason)
    return span


def span_to_wire(span: Span) -> dict:
    record = {
        "traceId": span.trace_id,
        "spanId": span.span_id,
        "startNs": span.start_ns,
        "endNs": span.end_ns,
        "appName": span.app_name,
        "appInstance": span.app_instance,
        "fqn": span.fqn,
        "host": span.host,
    }
    if span.parent_span_id is not None:
        record["parentSpanId"] = span.parent_span_id
    return record


class _SystemIndex:
    def __init__(self, system_id: str):
        self.system_id = system_id
        self.display_name = system_id
        self.first_seen_ns: int | None = None
        self.last_seen_ns: int | None = None
        self.span_count = 0
        # window index -> span ids, pruned to the most recent DUP_WINDOW_COUNT
        self.recent_ids: dict[int, set[str]] = {}
        self.lock = threading.Lock()

    def note(self, span: Span, window_index: int) -> None:
        self.span_count += 1
        if self.first_seen_ns is None or span.start_ns < self.first_seen_ns:
            self.first_seen_ns = span.start_ns
        if self.last_seen_ns is None or span.start_ns > self.last_seen_ns:
            self.last_seen_ns = span.start_ns
        self.recent_ids.setdefault(window_index, set()).add(span.span_id)

    def prune(self) -> None:
        while len(self.recent_ids) > DUP_WINDOW_COUNT:
            del self.recent_ids[min(self.recent_ids)]

    def is_recent_duplicate(self, span_id: str) -> bool:
        return any(span_id in ids for ids in self.recent_ids.values())

    def info(self) -> SystemInfo:
        return SystemInfo(
            system_id=self.system_id,
            display_name=self.display_name,
            first_seen_ns=self.first_seen_ns or 0,
            last_seen_ns=self.last_seen_ns or 0,
            span_count=self.span_count,
        )


class SpanStore:
    """Append-only, per-system span storage with windowed segment files."""

    def __init__(
        self,
        data_dir: str | Path,
        interval_ns: int = DEFAULT_INTERVAL_NS,
        max_payload: int = DEFAULT_MAX_PAYLOAD,
    ):
        self.data_dir = Path(data_dir)
        self.interval_ns = interval_ns
        self.max_payload = max_payload
        self._systems: dict[str, _SystemIndex] = {}
        self._registry_lock = threading.Lock()
        self._rescan()

    # -- startup ------------------------------------------------------------

    def _segment_dir(self, system_id: str) -> Path:
        return self.data_dir / system_id / "segments"

    def _rescan(self) -> None:
        if not self.data_dir.is_dir():
            return
        for system_dir in sorted(self.data_dir.iterdir()):
            seg_dir = system_dir / "segments"
            if not seg_dir.is_dir():
                continue
            index = _SystemIndex(system_dir.name)
            for seg in sorted(seg_dir.glob("*.ndjson"), key=lambda p: int(p.stem)):
                for span in _read_segment(seg):
                    index.note(span, int(seg.stem))
            index.prune()
            if index.span_count:
                self._systems[system_dir.name] = index

    def _index_for(self, system_id: str, create: bool) -> _SystemIndex:
        with self._registry_lock:
            index = self._systems.get(system_id)
            if index is None:
                if not create:
                    raise UnknownSystem(system_id)
                index = _SystemIndex(system_id)
                self._systems[system_id] = index
            return index

    # -- operations ----------------------------------------------------------

    def ingest_batch(self, system_id: str, payload: bytes | str) -> IngestReceipt:
        """Validate and append one newline-delimited batch for a system.

        Ingestion is append-only; duplicate span ids (within the batch or in
        the recent-window index) are rejected. Batches for one system are
        serialized; different systems proceed independently.
        """
        if not system_id:
            raise ValueError("system_id must be non-empty")
        if isinstance(payload, str):
            text = payload
            size = len(payload.encode("utf-8"))
        else:
            size = len(payload)
            if size > self.max_payload:
                raise PayloadTooLarge("payload is %d bytes" % size)
            try:
                text = payload.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise UnknownEncoding(str(exc))
        if size > self.max_payload:
            raise PayloadTooLarge("payload is %d bytes" % size)

        index = self._index_for(system_id, create=True)
        accepted: list[tuple[Span, int]] = []
        reasons: list[tuple[int, str]] = []
        batch_ids: set[str] = set()
        with index.lock:
            for line_no, line in enumerate(text.split("\n"), start=1):
                if not line.strip():
                    continue
                try:
                    span = parse_wire_record(line)
                except ValueError as exc:
                    reasons.append((line_no, str(exc)))
                    continue
                if span.span_id in batch_ids or index.is_recent_duplicate(span.span_id):
                    reasons.append((line_no, "duplicate span_id"))
                    continue
                batch_ids.add(span.span_id)
                accepted.append((span, window_of(span.start_ns, self.interval_ns)))

            self._append_segments(system_id, accepted)
            for span, win in accepted:
                index.note(span, win)
            index.prune()

        return IngestReceipt(
            accepted=len(accepted),
            rejected=len(reasons),
            rejection_reasons=tuple(reasons),
        )

    def _append_segments(self, system_id: str, spans: list[tuple[Span, int]]) -> None:
        by_window: dict[int, list[Span]] = {}
        for span, win in spans:
            by_window.setdefault(win, []).append(span)
        seg_dir = self._segment_dir(system_id)
        seg_dir.mkdir(parents=True, exist_ok=True)
        for win, members in by_window.items():
            path = seg_dir / ("%d.ndjson" % win)
            with open(path, "a", encoding="utf-8") as fh:
                for span in members:
                    fh.write(json.dumps(span_to_wire(span), sort_keys=True))
                    fh.write("\n")
                fh.flush()
                os.fsync(fh.fileno())

    def list_systems(self) -> list[SystemInfo]:
        with self._registry_lock:
            infos = [
                idx.info() for idx in self._systems.values() if idx.span_count > 0
            ]
        return sorted(infos, key=lambda i: i.display_name)

    def window_indices(self, system_id: str) -> list[int]:
        self._index_for(system_id, create=False)
        seg_dir = self._segment_dir(system_id)
        if not seg_dir.is_dir():
            return []
        return sorted(int(p.stem) for p in seg_dir.glob("*.ndjson"))

    def spans_in_window(self, system_id: str, window: WindowId) -> list[Span]:
        """Stored spans whose start_ns falls inside the half-open window."""
        self._index_for(system_id, create=False)
        path = self._segment_dir(system_id) / ("%d.ndjson" % window.index)
        spans = [s for s in _read_segment(path) if window.contains(s.start_ns)]
        spans.sort(key=lambda s: (s.start_ns, s.span_id))
        return spans

    def all_spans(self, system_id: str) -> list[Span]:
        self._index_for(system_id, create=False)
        spans: list[Span] = []
        seg_dir = self._segment_dir(system_id)
        if seg_dir.is_dir():
            for seg in sorted(seg_dir.glob("*.ndjson"), key=lambda p: int(p.stem)):
                spans.extend(_read_segment(seg))
        spans.sort(key=lambda s: (s.start_ns, s.span_id))
        return spans


def _read_segment(path: Path) -> Iterable[Span]:
    if not path.is_file():
        return
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                yield parse_wire_record(line)
            except ValueError:
                # tolerate a torn trailing line from a concurrent append
                continue
