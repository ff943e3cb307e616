"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Budgets are pinned from the criteria; a test fails outright if its wall
time exceeds the stated budget.
"""
import json
import random
import socket
import threading
import time
from contextlib import contextmanager
from pathlib import Path

import httpx
import pytest

from tracecity.city import MARGIN_M, layout, layout_doc
from tracecity.cli import main as cli_main
from tracecity.editor import build_source_map, entity_at, highlights_for, location_of
from tracecity.ingest import SpanStore, span_to_wire
from tracecity.model import assemble_traces, entity_ids
from tracecity.replay import build_schedule, load_fixture, run_schedule
from tracecity.snapshots import (
    DEFAULT_INTERVAL_NS,
    SnapshotService,
    WindowId,
    aggregate,
    diff_snapshots,
    window_of,
)
from tracecity.workspace import load_index

from conftest import BASE_NS, make_span, random_span_population, random_trace_spans, snapshot_of
from oracles import (
    aggregate_pairwise,
    apply_diff,
    check_city_invariants,
    group_and_link,
    highlight_join,
)
from test_collab import client_initial_seq, run_broadcast_harness

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "petclinic"
GOLDEN_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "golden"
META = json.loads((FIXTURE_DIR / "meta.json").read_text())


@contextmanager
def criterion(name: str, budget_s: float):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print("[FAIL] %s" % name, flush=True)
        raise
    elapsed = time.perf_counter() - started
    assert elapsed < budget_s, "%s took %.2fs (budget %.0fs)" % (name, elapsed, budget_s)
    print("[PASS] %s (%.2fs < %.0fs)" % (name, elapsed, budget_s), flush=True)


def wire_lines(spans):
    return "\n".join(json.dumps(span_to_wire(s)) for s in spans) + "\n"


# ---------------------------------------------------------------------------
# 1. commit interval
# ---------------------------------------------------------------------------


def test_commit_interval(tmp_path):
    with criterion("commit interval: 10 s windows split snapshots exactly", 1.0):
        t = BASE_NS - (BASE_NS % DEFAULT_INTERVAL_NS)
        spans = [
            make_span(1, 1, start_ns=t),
            make_span(2, 2, start_ns=t + 9_999_000_000),    # t + 9.999 s
            make_span(3, 3, start_ns=t + 10_000_000_000),   # t + 10 s
        ]
        store = SpanStore(tmp_path)
        store.ingest_batch("sys", wire_lines(spans))
        synthetic_now = t + 30 * 10**9
        service = SnapshotService(store, tmp_path, clock=lambda: synthetic_now)

        first = service.snapshot_for_window("sys", window_of(t))
        second = service.snapshot_for_window("sys", window_of(t) + 1)
        # t and t+9.999s share a snapshot; t+10s lands in the next one
        assert sum(m.call_count for m in first.method_metrics.values()) == 2
        assert sum(m.call_count for m in second.method_metrics.values()) == 1
        assert first.snapshot_id != second.snapshot_id
        assert service.latest_snapshot("sys").window.index == window_of(t) + 1


# ---------------------------------------------------------------------------
# 2. aggregation oracle
# ---------------------------------------------------------------------------


def test_aggregation_oracle():
    with criterion("aggregation: 1000 spans / 80 traces equal pairwise oracle", 5.0):
        rng = random.Random(20_24)
        spans = random_span_population(rng, 1000, 80)
        traces, orphans = assemble_traces(spans)
        assert not orphans
        window = WindowId("sys", window_of(min(s.start_ns for s in spans)))
        snapshot = aggregate(traces, window)
        (
            method_calls,
            method_durations,
            instance_counts,
            class_method_calls,
            edge_counts,
            edge_means,
            edge_cross,
        ) = aggregate_pairwise(traces)
        assert {m: v.call_count for m, v in snapshot.method_metrics.items()} == method_calls
        assert {
            m: v.total_duration_ns for m, v in snapshot.method_metrics.items()
        } == method_durations
        assert {
            c: v.instance_count for c, v in snapshot.class_metrics.items()
        } == instance_counts
        assert {
            c: v.method_call_count for c, v in snapshot.class_metrics.items()
        } == class_method_calls
        assert {(e.source, e.target): e.call_count for e in snapshot.edges} == edge_counts
        assert {
            (e.source, e.target): e.avg_duration_ns for e in snapshot.edges
        } == edge_means
        assert {
            (e.source, e.target): e.cross_application for e in snapshot.edges
        } == edge_cross


# ---------------------------------------------------------------------------
# 3. trace assembly oracle
# ---------------------------------------------------------------------------


def test_trace_assembly_oracle():
    with criterion("trace assembly: 500 shuffled cases equal group+link oracle", 10.0):
        rng = random.Random(8_15)
        window_start = window_of(BASE_NS) * DEFAULT_INTERVAL_NS
        for case in range(500):
            counter = [case * 10_000]
            spans = []
            for t in range(rng.randrange(1, 7)):
                spans.extend(
                    random_trace_spans(
                        rng, case * 100 + t, counter, rng.randrange(1, 12), window_start
                    )
                )
            rng.shuffle(spans)
            expected, expected_order = group_and_link(spans)
            traces, orphans = assemble_traces(spans)
            assert not orphans
            assert [t.trace_id for t in traces] == expected_order
            for trace in traces:
                roots, parent_of = expected[trace.trace_id]
                assert set(trace.roots) == roots
                assert trace.parent_of == parent_of
            assert sum(len(t.spans) for t in traces) == len(spans)


# ---------------------------------------------------------------------------
# 4. layout invariants
# ---------------------------------------------------------------------------


def petclinic_snapshot(tmp_path, window_offset=0):
    store = SpanStore(tmp_path)
    spans = load_fixture(FIXTURE_DIR / "spans.ndjson")
    store.ingest_batch(META["system_id"], wire_lines(spans))
    service = SnapshotService(
        store, tmp_path, clock=lambda: META["base_ns"] + 10 * DEFAULT_INTERVAL_NS
    )
    return service.snapshot_for_window(
        META["system_id"], window_of(META["base_ns"]) + window_offset
    )


def test_layout_invariants(tmp_path):
    with criterion(
        "layout: 200 random snapshots + petclinic fixture, zero violations, bit-stable",
        30.0,
    ):
        rng = random.Random(77)
        for _ in range(200):
            spans = random_span_population(
                rng, rng.randrange(10, 120), rng.randrange(1, 10)
            )
            city = layout(snapshot_of(spans))
            assert check_city_invariants(city, MARGIN_M) == []

        snapshot = petclinic_snapshot(tmp_path)
        assert len(snapshot.landscape.applications) == 4
        assert len(snapshot.class_metrics) == 26
        city = layout(snapshot)
        assert check_city_invariants(city, MARGIN_M) == []

        reference = json.dumps(layout_doc(city), sort_keys=True).encode()
        for _ in range(10):
            assert json.dumps(layout_doc(layout(snapshot)), sort_keys=True).encode() == reference
        from tracecity.snapshots import Snapshot

        permuted = Snapshot(
            snapshot_id=snapshot.snapshot_id,
            window=snapshot.window,
            landscape=snapshot.landscape,
            class_metrics=dict(reversed(list(snapshot.class_metrics.items()))),
            method_metrics=dict(reversed(list(snapshot.method_metrics.items()))),
            edges=tuple(reversed(snapshot.edges)),
        )
        assert json.dumps(layout_doc(layout(permuted)), sort_keys=True).encode() == reference


# ---------------------------------------------------------------------------
# 5. broadcast semantics
# ---------------------------------------------------------------------------


def test_broadcast_semantics():
    with criterion(
        "broadcast: 3 clients, 100 events, disconnects; exactly-once in order", 10.0
    ):
        hub, token, clients = run_broadcast_harness(seed=404, n_events=100)
        history = {e.seq: e for e in hub.history(token)}
        assert len(history) >= 100
        for user, client in clients.items():
            seqs = [e.seq for e in client.received]
            assert seqs == sorted(seqs) and len(seqs) == len(set(seqs))
            assert all(e.origin_user != user for e in client.received)
            joined_at = client_initial_seq(client, hub, token)
            expected = [
                seq
                for seq, event in sorted(history.items())
                if event.origin_user != user and seq > joined_at
            ]
            assert seqs == expected
            for event in client.received:
                assert history[event.seq] == event

        # late joiner state equals the full-history fold
        from tracecity.collab import SessionState, reduce

        state, resume = hub.join_session(token, "latecomer")
        folded = SessionState()
        for event in hub.history(token):
            folded = reduce(folded, event)
        assert folded == state and resume == state.last_seq


# ---------------------------------------------------------------------------
# 6. editor-link round trip
# ---------------------------------------------------------------------------


def test_editor_link_round_trip(tmp_path):
    with criterion("editor link: fixture corpus round-trips; highlights join", 5.0):
        snapshot = petclinic_snapshot(tmp_path)
        index = load_index(FIXTURE_DIR / "workspace_index.json")
        source_map = build_source_map(index, snapshot.landscape)
        assert len(source_map.by_entity) == 26
        for class_id, loc in source_map.by_entity.items():
            file, line = location_of(source_map, class_id)
            assert entity_at(source_map, file, line) == class_id
            for method, method_line in loc.method_lines.items():
                method_id = "%s/%s" % (class_id, method)
                file, line = location_of(source_map, method_id)
                assert entity_at(source_map, file, line) == method_id

        files = {loc.file for loc in source_map.by_entity.values()}
        assert len(files) == 26
        for file in sorted(files):
            got = {
                (m.kind, m.entity_id, m.line, m.call_count)
                for m in highlights_for(snapshot, source_map, file)
            }
            expected = highlight_join(
                snapshot.method_metrics,
                snapshot.class_metrics,
                source_map.by_entity,
                file,
            )
            assert got == expected


# ---------------------------------------------------------------------------
# 7. snapshot diff conservation
# ---------------------------------------------------------------------------


def test_diff_conservation():
    with criterion("diff: old + diff = new on 50 random pairs; diff(s,s) empty", 5.0):
        rng = random.Random(3_14)
        base = snapshot_of(random_span_population(rng, 40, 4))
        assert diff_snapshots(base, base).empty
        for _ in range(50):
            old = snapshot_of(
                random_span_population(rng, rng.randrange(10, 90), rng.randrange(1, 9))
            )
            new = snapshot_of(
                random_span_population(rng, rng.randrange(10, 90), rng.randrange(1, 9))
            )
            diff = diff_snapshots(old, new)
            got_ids, got_edges = apply_diff(
                entity_ids(old.landscape),
                {(e.source, e.target): e.call_count for e in old.edges},
                diff,
            )
            assert got_ids == entity_ids(new.landscape)
            assert got_edges == {
                (e.source, e.target): e.call_count for e in new.edges
            }


# ---------------------------------------------------------------------------
# 8. end-to-end replay through a live server
# ---------------------------------------------------------------------------


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.mark.slow
def test_end_to_end_replay(tmp_path):
    with criterion(
        "end-to-end: replay --immediate over HTTP matches golden files", 30.0
    ):
        import uvicorn

        from tracecity.server import ServerConfig, TraceCityApp

        data_dir = tmp_path / "data"
        index_target = data_dir / META["system_id"] / "workspace_index.json"
        index_target.parent.mkdir(parents=True)
        index_target.write_text((FIXTURE_DIR / "workspace_index.json").read_text())

        port = _free_port()
        config = ServerConfig(listen="127.0.0.1:%d" % port, data_dir=str(data_dir))
        server = uvicorn.Server(
            uvicorn.Config(
                TraceCityApp(config), host="127.0.0.1", port=port, log_level="error"
            )
        )
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        base_url = "http://127.0.0.1:%d" % port
        deadline = time.time() + 15
        while True:
            try:
                if httpx.get(base_url + "/healthz", timeout=1.0).status_code == 200:
                    break
            except httpx.HTTPError:
                pass
            assert time.time() < deadline, "server did not start"
            time.sleep(0.05)

        try:
            exit_code = cli_main(
                [
                    "replay",
                    str(FIXTURE_DIR / "spans.ndjson"),
                    "--system",
                    META["system_id"],
                    "--immediate",
                    "--at",
                    str(META["replay_at_ns"]),
                    "--server",
                    base_url,
                ]
            )
            assert exit_code == 0

            latest = httpx.get(
                base_url + "/v1/systems/%s/snapshots/latest" % META["system_id"],
                timeout=10.0,
            )
            assert latest.status_code == 200
            golden_snapshot = json.loads((GOLDEN_DIR / "latest_snapshot.json").read_text())
            assert latest.json() == golden_snapshot

            snapshot_id = golden_snapshot["snapshot_id"]
            city = httpx.get(
                base_url + "/v1/snapshots/%s/layout" % snapshot_id, timeout=10.0
            )
            assert city.json() == json.loads((GOLDEN_DIR / "layout.json").read_text())

            markers = httpx.get(
                base_url + "/v1/snapshots/%s/highlights" % snapshot_id,
                params={"file": META["highlight_file"]},
                timeout=10.0,
            )
            assert markers.json() == json.loads(
                (GOLDEN_DIR / "highlights_owner.json").read_text()
            )
        finally:
            server.should_exit = True
            thread.join(timeout=10)
