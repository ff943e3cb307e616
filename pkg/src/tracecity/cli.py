"""Operator CLI: serve, ingest, replay, snapshots ls, layout export, index-workspace."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .city import layout, layout_doc
from .ingest import IngestReceipt, SpanStore
from .replay import build_schedule, load_fixture, run_schedule
from .server import ProxyRule, ServerConfig, TraceCityApp, build_services
from .snapshots import DEFAULT_INTERVAL_NS, SnapshotService
from .workspace import scan_workspace, write_index


def _data_dir(args) -> str:
    if args.data_dir:
        return args.data_dir
    return os.environ.get("TRACECITY_DATA_DIR", "./data")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data-dir", default=None, help="storage root (env TRACECITY_DATA_DIR, default ./data)")
    parser.add_argument(
        "--commit-interval-ns",
        type=int,
        default=DEFAULT_INTERVAL_NS,
        help="snapshot commit window length in nanoseconds",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tracecity")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP/WebSocket server")
    _add_common(serve)
    serve.add_argument("--listen", default="127.0.0.1:8000")
    serve.add_argument("--static-root", default=None)
    serve.add_argument(
        "--proxy",
        action="append",
        default=[],
        metavar="PREFIX=UPSTREAM",
        help="reverse-proxy rule, repeatable",
    )

    ingest = sub.add_parser("ingest", help="ingest a wire-format span file")
    _add_common(ingest)
    ingest.add_argument("file")
    ingest.add_argument("--system", required=True)

    replay = sub.add_parser("replay", help="re-timestamp and replay a span fixture")
    _add_common(replay)
    replay.add_argument("file")
    replay.add_argument("--system", required=True)
    group = replay.add_mutually_exclusive_group()
    group.add_argument("--speed", type=float, default=1.0)
    group.add_argument("--immediate", action="store_true")
    replay.add_argument("--at", type=int, default=None, help="synthetic 'now' in epoch ns")
    replay.add_argument("--server", default=None, help="submit over HTTP to this base URL")

    snapshots = sub.add_parser("snapshots", help="snapshot inspection")
    snap_sub = snapshots.add_subparsers(dest="snapshots_command", required=True)
    ls = snap_sub.add_parser("ls", help="list closed-window snapshots of a system")
    _add_common(ls)
    ls.add_argument("system")

    layout_cmd = sub.add_parser("layout", help="city layout tools")
    layout_sub = layout_cmd.add_subparsers(dest="layout_command", required=True)
    export = layout_sub.add_parser("export", help="write a snapshot's city layout to a file")
    _add_common(export)
    export.add_argument("snapshot_id")
    export.add_argument("--out", required=True)

    index = sub.add_parser("index-workspace", help="scan sources into a workspace index")
    index.add_argument("directory")
    index.add_argument("--out", required=True)
    return parser


def cmd_serve(args) -> int:
    import uvicorn

    rules = []
    for spec in args.proxy:
        prefix, _, upstream = spec.partition("=")
        if not upstream:
            print("bad --proxy rule (want PREFIX=UPSTREAM): %s" % spec, file=sys.stderr)
            return 2
        rules.append(ProxyRule(prefix, upstream))
    config = ServerConfig(
        listen=args.listen,
        data_dir=_data_dir(args),
        commit_interval_ns=args.commit_interval_ns,
        static_root=args.static_root,
        proxy_rules=tuple(rules),
    )
    host, _, port = args.listen.partition(":")
    app = TraceCityApp(config)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="info")
    return 0


def cmd_ingest(args) -> int:
    store = SpanStore(_data_dir(args), interval_ns=args.commit_interval_ns)
    receipt = store.ingest_batch(args.system, Path(args.file).read_bytes())
    print(
        json.dumps(
            {
                "accepted": receipt.accepted,
                "rejected": receipt.rejected,
                "rejection_reasons": [
                    {"line": line, "reason": reason}
                    for line, reason in receipt.rejection_reasons
                ],
            }
        )
    )
    return 0


def cmd_replay(args) -> int:
    spans = load_fixture(args.file)
    schedule = build_schedule(
        spans,
        speed=args.speed,
        immediate=args.immediate,
        at_ns=args.at,
        interval_ns=args.commit_interval_ns,
    )
    if args.server:
        import httpx

        url = "%s/v1/systems/%s/spans" % (args.server.rstrip("/"), args.system)

        def submit(payload: str) -> IngestReceipt:
            response = httpx.post(url, content=payload.encode(), timeout=30.0)
            response.raise_for_status()
            doc = response.json()
            return IngestReceipt(
                doc["accepted"],
                doc["rejected"],
                tuple((r["line"], r["reason"]) for r in doc["rejection_reasons"]),
            )

    else:
        store = SpanStore(_data_dir(args), interval_ns=args.commit_interval_ns)

        def submit(payload: str) -> IngestReceipt:
            return store.ingest_batch(args.system, payload)

    accepted, rejected = run_schedule(schedule, submit)
    print(json.dumps({"accepted": accepted, "rejected": rejected}))
    return 0


def cmd_snapshots_ls(args) -> int:
    services = build_services(
        ServerConfig(data_dir=_data_dir(args), commit_interval_ns=args.commit_interval_ns)
    )
    for snapshot in services.snapshots.list_snapshots(args.system):
        print(
            "%s window=%d [%d, %d)"
            % (
                snapshot.snapshot_id,
                snapshot.window.index,
                snapshot.window.start_ns,
                snapshot.window.end_ns,
            )
        )
    return 0


def cmd_layout_export(args) -> int:
    services = build_services(
        ServerConfig(data_dir=_data_dir(args), commit_interval_ns=args.commit_interval_ns)
    )
    if not services.snapshots.has(args.snapshot_id):
        print("unknown snapshot: %s" % args.snapshot_id, file=sys.stderr)
        return 1
    snapshot = services.snapshots.load(args.snapshot_id)
    Path(args.out).write_text(json.dumps(layout_doc(layout(snapshot)), indent=1))
    return 0


def cmd_index_workspace(args) -> int:
    records = scan_workspace(args.directory)
    write_index(records, args.out)
    print("indexed %d files" % len(records))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    if args.command == "ingest":
        return cmd_ingest(args)
    if args.command == "replay":
        return cmd_replay(args)
    if args.command == "snapshots":
        return cmd_snapshots_ls(args)
    if args.command == "layout":
        return cmd_layout_export(args)
    if args.command == "index-workspace":
        return cmd_index_workspace(args)
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
