"""Fixed-interval snapshots of aggregated runtime behavior, and their diffs.

A snapshot rolls the traces of one commit window (default 10 s, epoch-aligned
half-open intervals) into per-method call counts, per-class instance counts,
and method-to-method communication edges. A whole trace belongs to the window
containing its earliest span, so call edges are never torn at a boundary.
"""
from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Callable

from .model import (
    Landscape,
    StructurePath,
    Trace,
    assemble_traces,
    class_entity_id,
    empty_landscape,
    entity_id_of,
    entity_ids,
    landscape_doc,
    merge_structure,
    parse_fqn,
    with_instance,
)

if TYPE_CHECKING:  # pragma: no cover
    from .ingest import SpanStore

DEFAULT_INTERVAL_NS = 10_000_000_000
CONSTRUCTOR_METHOD = "<init>"


class NegativeTime(ValueError):
    """Timestamp before the windowing epoch."""


class WindowMismatch(ValueError):
    """A trace's earliest span does not start inside the target window."""


class SystemMismatch(ValueError):
    """Diff requested between snapshots of different systems."""


# ---------------------------------------------------------------------------
# Windows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowId:
    """Half-open commit window [start, end) of one system's timeline."""

    system_id: str
    index: int
    interval_ns: int = DEFAULT_INTERVAL_NS
    epoch_ns: int = 0

    @property
    def start_ns(self) -> int:
        return self.epoch_ns + self.index * self.interval_ns

    @property
    def end_ns(self) -> int:
        return self.start_ns + self.interval_ns

    def contains(self, t_ns: int) -> bool:
        return self.start_ns <= t_ns < self.end_ns


def window_of(t_ns: int, interval_ns: int = DEFAULT_INTERVAL_NS, epoch_ns: int = 0) -> int:
    """Window index floor((t - epoch) / interval); raises NegativeTime below epoch."""
    if interval_ns <= 0:
        raise ValueError("interval_ns must be positive")
    if t_ns < epoch_ns:
        raise NegativeTime("timestamp %d precedes epoch %d" % (t_ns, epoch_ns))
    return (t_ns - epoch_ns) // interval_ns


# ---------------------------------------------------------------------------
# Snapshot types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassMetrics:
    method_call_count: int
    instance_count: int


@dataclass(frozen=True)
class MethodMetrics:
    call_count: int
    total_duration_ns: int


@dataclass(frozen=True)
class CommEdge:
    source: str
    target: str
    call_count: int
    avg_duration_ns: float
    cross_application: bool


@dataclass(frozen=True)
class Snapshot:
    snapshot_id: str
    window: WindowId
    landscape: Landscape
    class_metrics: dict[str, ClassMetrics]
    method_metrics: dict[str, MethodMetrics]
    edges: tuple[CommEdge, ...]


@dataclass(frozen=True)
class SnapshotDiff:
    added_entities: frozenset[str]
    removed_entities: frozenset[str]
    edge_deltas: dict[tuple[str, str], int]

    @property
    def empty(self) -> bool:
        return not (self.added_entities or self.removed_entities or self.edge_deltas)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def aggregate(traces: list[Trace], window: WindowId) -> Snapshot:
    """Roll one window's traces into a snapshot.

    Method call_count counts spans of that method; an edge is counted once
    per parent/child span pair with avg_duration_ns the mean child duration;
    instance_count counts constructor ("<init>") spans per class. Output is
    independent of trace order: every collection is canonically sorted and
    the snapshot_id is a content hash.
    """
    for trace in traces:
        if not window.contains(trace.earliest_start_ns):
            raise WindowMismatch(
                "trace %s starts at %d outside window %d"
                % (trace.trace_id, trace.earliest_start_ns, window.index)
            )

    landscape = empty_landscape(window.system_id)
    method_app: dict[str, str] = {}
    method_counts: dict[str, int] = {}
    method_durations: dict[str, int] = {}
    class_instances: dict[str, int] = {}
    class_methods: dict[str, set[str]] = {}
    edge_counts: dict[tuple[str, str], int] = {}
    edge_durations: dict[tuple[str, str], int] = {}

    for trace in traces:
        spans_by_id = {s.span_id: s for s in trace.spans}
        for span in trace.spans:
            path = parse_fqn(span.fqn)
            method_id = entity_id_of(span.app_name, path)
            class_id = class_entity_id(span.app_name, path)
            landscape = merge_structure(landscape, span.app_name, path)
            landscape = with_instance(landscape, span.app_name, span.app_instance)
            method_app[method_id] = span.app_name
            method_counts[method_id] = method_counts.get(method_id, 0) + 1
            method_durations[method_id] = (
                method_durations.get(method_id, 0) + span.duration_ns
            )
            class_methods.setdefault(class_id, set()).add(method_id)
            if path.method_name == CONSTRUCTOR_METHOD:
                class_instances[class_id] = class_instances.get(class_id, 0) + 1
            class_instances.setdefault(class_id, 0)

        for child_id, parent_id in trace.parent_of.items():
            child = spans_by_id[child_id]
            parent = spans_by_id[parent_id]
            key = (
                entity_id_of(parent.app_name, parse_fqn(parent.fqn)),
                entity_id_of(child.app_name, parse_fqn(child.fqn)),
            )
            edge_counts[key] = edge_counts.get(key, 0) + 1
            edge_durations[key] = edge_durations.get(key, 0) + child.duration_ns

    method_metrics = {
        mid: MethodMetrics(method_counts[mid], method_durations[mid])
        for mid in sorted(method_counts)
    }
    class_metrics = {
        cid: ClassMetrics(
            sum(method_counts[m] for m in class_methods[cid]),
            class_instances[cid],
        )
        for cid in sorted(class_methods)
    }
    edges = tuple(
        CommEdge(
            source=src,
            target=dst,
            call_count=edge_counts[(src, dst)],
            avg_duration_ns=edge_durations[(src, dst)] / edge_counts[(src, dst)],
            cross_application=method_app[src] != method_app[dst],
        )
        for src, dst in sorted(edge_counts)
    )

    body = _snapshot_body_doc(window, landscape, class_metrics, method_metrics, edges)
    snapshot_id = hashlib.sha256(
        json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
    return Snapshot(snapshot_id, window, landscape, class_metrics, method_metrics, edges)


def diff_snapshots(old: Snapshot, new: Snapshot) -> SnapshotDiff:
    """Entity and edge-count deltas between two snapshots of one system."""
    if old.window.system_id != new.window.system_id:
        raise SystemMismatch(
            "%s vs %s" % (old.window.system_id, new.window.system_id)
        )
    old_ids = entity_ids(old.landscape)
    new_ids = entity_ids(new.landscape)
    old_counts = {(e.source, e.target): e.call_count for e in old.edges}
    new_counts = {(e.source, e.target): e.call_count for e in new.edges}
    deltas = {}
    for key in set(old_counts) | set(new_counts):
        delta = new_counts.get(key, 0) - old_counts.get(key, 0)
        if delta != 0:
            deltas[key] = delta
    return SnapshotDiff(
        added_entities=frozenset(new_ids - old_ids),
        removed_entities=frozenset(old_ids - new_ids),
        edge_deltas=deltas,
    )


# ---------------------------------------------------------------------------
# Documents
# ---------------------------------------------------------------------------


def _snapshot_body_doc(window, landscape, class_metrics, method_metrics, edges) -> dict:
    return {
        "window": {
            "system_id": window.system_id,
            "index": window.index,
            "interval_ns": window.interval_ns,
            "start_ns": window.start_ns,
            "end_ns": window.end_ns,
        },
        "landscape": landscape_doc(landscape),
        "class_metrics": {
            cid: {
                "method_call_count": m.method_call_count,
                "instance_count": m.instance_count,
            }
            for cid, m in sorted(class_metrics.items())
        },
        "method_metrics": {
            mid: {"call_count": m.call_count, "total_duration_ns": m.total_duration_ns}
            for mid, m in sorted(method_metrics.items())
        },
        "edges": [
            {
                "source": e.source,
                "target": e.target,
                "call_count": e.call_count,
                "avg_duration_ns": e.avg_duration_ns,
                "cross_application": e.cross_application,
            }
            for e in edges
        ],
    }


def snapshot_doc(snapshot: Snapshot) -> dict:
    doc = _snapshot_body_doc(
        snapshot.window,
        snapshot.landscape,
        snapshot.class_metrics,
        snapshot.method_metrics,
        snapshot.edges,
    )
    doc["snapshot_id"] = snapshot.snapshot_id
    return doc


def diff_doc(diff: SnapshotDiff) -> dict:
    return {
        "added_entities": sorted(diff.added_entities),
        "removed_entities": sorted(diff.removed_entities),
        "edge_deltas": [
            {"source": src, "target": dst, "delta": delta}
            for (src, dst), delta in sorted(diff.edge_deltas.items())
        ],
    }


def snapshot_from_doc(doc: dict) -> Snapshot:
    """Rebuild a Snapshot value from its stored document."""
    win = doc["window"]
    window = WindowId(win["system_id"], win["index"], win["interval_ns"])
    landscape = empty_landscape(win["system_id"])

    def walk(app_name: str, pkg_doc: dict, prefix: tuple[str, ...]) -> None:
        nonlocal landscape
        chain = prefix + (pkg_doc["name"],)
        for cls in pkg_doc["classes"]:
            packages = () if chain == ("",) else chain
            for method in cls["methods"]:
                landscape = merge_structure(
                    landscape,
                    app_name,
                    StructurePath(packages, cls["name"], method["name"]),
                )
        for sub in pkg_doc["subpackages"]:
            walk(app_name, sub, chain)

    for app in doc["landscape"]["applications"]:
        for pkg in app["root_packages"]:
            walk(app["name"], pkg, ())
        for instance in app["instances"]:
            landscape = with_instance(landscape, app["name"], instance)

    class_metrics = {
        cid: ClassMetrics(m["method_call_count"], m["instance_count"])
        for cid, m in doc["class_metrics"].items()
    }
    method_metrics = {
        mid: MethodMetrics(m["call_count"], m["total_duration_ns"])
        for mid, m in doc["method_metrics"].items()
    }
    edges = tuple(
        CommEdge(
            e["source"],
            e["target"],
            e["call_count"],
            e["avg_duration_ns"],
            e["cross_application"],
        )
        for e in doc["edges"]
    )
    return Snapshot(
        doc["snapshot_id"], window, landscape, class_metrics, method_metrics, edges
    )


# ---------------------------------------------------------------------------
# Snapshot service: closed-window aggregation over a span store
# ---------------------------------------------------------------------------


class SnapshotService:
    """Aggregates closed windows exactly once and persists the documents.

    Snapshot files are content-hash named, one JSON document per snapshot,
    under ``<data_dir>/<system>/snapshots/``; the window-to-id index is
    rebuilt on startup by scanning the documents.
    """

    def __init__(
        self,
        store: "SpanStore",
        data_dir: str | Path,
        interval_ns: int = DEFAULT_INTERVAL_NS,
        clock: Callable[[], int] = time.time_ns,
    ):
        self.store = store
        self.data_dir = Path(data_dir)
        self.interval_ns = interval_ns
        self.clock = clock
        # (system, window index) -> snapshot_id; snapshot_id -> path
        self._by_window: dict[tuple[str, int], str] = {}
        self._paths: dict[str, Path] = {}
        self._rescan()

    def _snapshot_dir(self, system_id: str) -> Path:
        return self.data_dir / system_id / "snapshots"

    def _rescan(self) -> None:
        if not self.data_dir.is_dir():
            return
        for system_dir in sorted(self.data_dir.iterdir()):
            snap_dir = system_dir / "snapshots"
            if not snap_dir.is_dir():
                continue
            for path in sorted(snap_dir.glob("*.json")):
                try:
                    doc = json.loads(path.read_text())
                except (OSError, json.JSONDecodeError):
                    continue
                key = (doc["window"]["system_id"], doc["window"]["index"])
                self._by_window[key] = doc["snapshot_id"]
                self._paths[doc["snapshot_id"]] = path

    def window(self, system_id: str, index: int) -> WindowId:
        return WindowId(system_id, index, self.interval_ns)

    def windows_with_data(self, system_id: str) -> list[int]:
        return self.store.window_indices(system_id)

    def closed_windows(self, system_id: str) -> list[int]:
        now = self.clock()
        return [
            idx
            for idx in self.windows_with_data(system_id)
            if self.window(system_id, idx).end_ns <= now
        ]

    def snapshot_for_window(self, system_id: str, index: int) -> Snapshot:
        """Aggregate (once) and return the snapshot of one closed window."""
        key = (system_id, index)
        if key in self._by_window:
            return self.load(self._by_window[key])
        window = self.window(system_id, index)
        traces = self._traces_for_window(system_id, window)
        snapshot = aggregate(traces, window)
        self._persist(snapshot)
        return snapshot

    def latest_snapshot(self, system_id: str) -> Snapshot | None:
        """Snapshot of the most recent closed window with data, or None.

        The still-open window is never returned.
        """
        closed = self.closed_windows(system_id)
        if not closed:
            return None
        return self.snapshot_for_window(system_id, max(closed))

    def list_snapshots(self, system_id: str) -> list[Snapshot]:
        return [
            self.snapshot_for_window(system_id, idx)
            for idx in sorted(self.closed_windows(system_id))
        ]

    def load(self, snapshot_id: str) -> Snapshot:
        path = self._paths[snapshot_id]
        return snapshot_from_doc(json.loads(path.read_text()))

    def has(self, snapshot_id: str) -> bool:
        return snapshot_id in self._paths

    def _traces_for_window(self, system_id: str, window: WindowId) -> list[Trace]:
        # Assemble over the whole store so traces straddling a boundary stay
        # atomic, then keep those rooted (earliest span) in this window.
        spans = self.store.all_spans(system_id)
        traces, _orphans = assemble_traces(spans)
        return [t for t in traces if window.contains(t.earliest_start_ns)]

    def _persist(self, snapshot: Snapshot) -> None:
        snap_dir = self._snapshot_dir(snapshot.window.system_id)
        snap_dir.mkdir(parents=True, exist_ok=True)
        path = snap_dir / ("%s.json" % snapshot.snapshot_id)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(snapshot_doc(snapshot), sort_keys=True, indent=1))
        os.replace(tmp, path)
        self._by_window[(snapshot.window.system_id, snapshot.window.index)] = (
            snapshot.snapshot_id
        )
        self._paths[snapshot.snapshot_id] = path
