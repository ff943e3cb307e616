#!/usr/bin/env python3
"""Regenerate golden files for the end-to-end replay check.

Runs the immediate replay of the petclinic fixture at its pinned synthetic
clock, then freezes the latest snapshot, its city layout, and the Owner
file highlights as JSON documents. The end-to-end test replays the same
fixture through a live server and requires the HTTP responses to match
these documents exactly.
"""
from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from tracecity.city import layout, layout_doc  # noqa: E402
from tracecity.editor import build_source_map, highlights_for, marker_doc  # noqa: E402
from tracecity.ingest import SpanStore  # noqa: E402
from tracecity.replay import build_schedule, load_fixture, run_schedule  # noqa: E402
from tracecity.snapshots import SnapshotService, snapshot_doc  # noqa: E402
from tracecity.workspace import load_index  # noqa: E402

FIXTURE = REPO / "fixtures" / "petclinic"
GOLDEN = REPO / "fixtures" / "golden"


def main() -> None:
    meta = json.loads((FIXTURE / "meta.json").read_text())
    spans = load_fixture(FIXTURE / "spans.ndjson")
    system = meta["system_id"]
    at_ns = meta["replay_at_ns"]

    with tempfile.TemporaryDirectory() as tmp:
        store = SpanStore(tmp)
        schedule = build_schedule(spans, immediate=True, at_ns=at_ns)
        accepted, rejected = run_schedule(
            schedule, lambda payload: store.ingest_batch(system, payload), clock=lambda: at_ns
        )
        assert rejected == 0, rejected
        service = SnapshotService(store, tmp, clock=lambda: at_ns)
        latest = service.latest_snapshot(system)
        assert latest is not None

        source_map = build_source_map(
            load_index(FIXTURE / "workspace_index.json"), latest.landscape
        )
        markers = highlights_for(latest, source_map, meta["highlight_file"])

        GOLDEN.mkdir(parents=True, exist_ok=True)
        (GOLDEN / "latest_snapshot.json").write_text(
            json.dumps(snapshot_doc(latest), indent=1, sort_keys=True)
        )
        (GOLDEN / "layout.json").write_text(
            json.dumps(layout_doc(layout(latest)), indent=1, sort_keys=True)
        )
        (GOLDEN / "highlights_owner.json").write_text(
            json.dumps([marker_doc(m) for m in markers], indent=1, sort_keys=True)
        )
    print(
        "golden: snapshot %s, %d buildings, %d markers"
        % (
            latest.snapshot_id[:12],
            len(layout(latest).buildings),
            len(markers),
        )
    )


if __name__ == "__main__":
    main()
