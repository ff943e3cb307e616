"""HTTP/WebSocket front: route dispatch, static files, reverse proxy, API.

A single ASGI app composes every module. Each request first goes through
the pure ``route`` decision (proxy rules by longest prefix, then the /v1
API table, then static lookup), and the matching branch handles it.
"""
from __future__ import annotations

import asyncio
import json
import re
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path

import httpx
from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse
from starlette.websockets import WebSocket, WebSocketDisconnect

from . import collab, editor
from .city import layout, layout_doc
from .collab import SessionHub
from .ingest import (
    PayloadTooLarge,
    SpanStore,
    UnknownEncoding,
    UnknownSystem,
)
from .snapshots import (
    DEFAULT_INTERVAL_NS,
    SnapshotService,
    SystemMismatch,
    diff_doc,
    diff_snapshots,
    snapshot_doc,
)
from .workspace import load_index

DEFAULT_DATA_DIR = "./data"


@dataclass(frozen=True)
class ProxyRule:
    path_prefix: str
    upstream: str


@dataclass(frozen=True)
class ServerConfig:
    listen: str = "127.0.0.1:8000"
    data_dir: str = DEFAULT_DATA_DIR
    commit_interval_ns: int = DEFAULT_INTERVAL_NS
    static_root: str | None = None
    proxy_rules: tuple[ProxyRule, ...] = ()

    def __post_init__(self):
        if self.commit_interval_ns <= 0:
            raise ValueError("commit interval must be positive")
        prefixes = [r.path_prefix for r in self.proxy_rules]
        if any(not p for p in prefixes) or len(set(prefixes)) != len(prefixes):
            raise ValueError("proxy prefixes must be non-empty and unique")


# ---------------------------------------------------------------------------
# Routing decision
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Static:
    file_path: str


@dataclass(frozen=True)
class Api:
    endpoint: str


@dataclass(frozen=True)
class Proxy:
    upstream: str


@dataclass(frozen=True)
class NotFound:
    pass


API_TABLE: tuple[tuple[str, re.Pattern, str], ...] = (
    ("POST", re.compile(r"^/v1/systems/[^/]+/spans$"), "ingest_spans"),
    ("GET", re.compile(r"^/v1/systems$"), "list_systems"),
    ("GET", re.compile(r"^/v1/systems/[^/]+/snapshots$"), "list_snapshots"),
    ("GET", re.compile(r"^/v1/systems/[^/]+/snapshots/latest$"), "latest_snapshot"),
    ("GET", re.compile(r"^/v1/snapshots/[^/]+/diff/[^/]+$"), "diff_snapshots"),
    ("GET", re.compile(r"^/v1/snapshots/[^/]+/layout$"), "snapshot_layout"),
    ("GET", re.compile(r"^/v1/snapshots/[^/]+/highlights$"), "snapshot_highlights"),
    ("GET", re.compile(r"^/v1/snapshots/[^/]+$"), "get_snapshot"),
    ("POST", re.compile(r"^/v1/sessions$"), "create_session"),
    ("GET", re.compile(r"^/v1/sessions/[^/]+/state$"), "session_state"),
    ("GET", re.compile(r"^/v1/sessions/[^/]+$"), "session_socket"),
    ("GET", re.compile(r"^/v1/editor/[^/]+$"), "editor_socket"),
    ("GET", re.compile(r"^/healthz$"), "healthz"),
)


def route(config: ServerConfig, method: str, path: str):
    """Map one request to Static | Api | Proxy | NotFound, deterministically."""
    best: ProxyRule | None = None
    for rule in config.proxy_rules:
        if path.startswith(rule.path_prefix):
            if best is None or len(rule.path_prefix) > len(best.path_prefix):
                best = rule
    if best is not None:
        return Proxy(best.upstream)

    for table_method, pattern, endpoint in API_TABLE:
        if method == table_method and pattern.match(path):
            return Api(endpoint)

    if config.static_root and method in ("GET", "HEAD"):
        resolved = _static_lookup(config.static_root, path)
        if resolved is not None:
            return Static(str(resolved))
    return NotFound()


def _static_lookup(static_root: str, path: str) -> Path | None:
    root = Path(static_root).resolve()
    relative = path.lstrip("/")
    try:
        candidate = (root / relative).resolve() if relative else root
    except OSError:
        return None
    if root != candidate and root not in candidate.parents:
        return None
    if candidate.is_dir():
        candidate = candidate / "index.html"
    return candidate if candidate.is_file() else None


# ---------------------------------------------------------------------------
# Services
# ---------------------------------------------------------------------------


@dataclass
class Services:
    store: SpanStore
    snapshots: SnapshotService
    hub: SessionHub
    data_dir: Path

    def source_map_for(self, system_id: str, landscape) -> editor.SourceMap:
        index_path = self.data_dir / system_id / "workspace_index.json"
        if not index_path.is_file():
            return editor.SourceMap()
        return editor.build_source_map(load_index(index_path), landscape)


def build_services(config: ServerConfig, clock=time.time_ns) -> Services:
    store = SpanStore(config.data_dir, interval_ns=config.commit_interval_ns)
    snapshots = SnapshotService(
        store, config.data_dir, interval_ns=config.commit_interval_ns, clock=clock
    )
    return Services(
        store=store,
        snapshots=snapshots,
        hub=SessionHub(clock=clock),
        data_dir=Path(config.data_dir),
    )


# ---------------------------------------------------------------------------
# API app
# ---------------------------------------------------------------------------


SESSION_GC_PERIOD_S = 60.0


def build_api(services: Services) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        async def gc_loop():
            while True:
                await asyncio.sleep(SESSION_GC_PERIOD_S)
                services.hub.collect_idle()

        task = asyncio.create_task(gc_loop())
        try:
            yield
        finally:
            task.cancel()

    app = FastAPI(title="tracecity", docs_url=None, redoc_url=None, lifespan=lifespan)

    @app.get("/healthz")
    def healthz() -> Response:
        return PlainTextResponse("ok")

    @app.post("/v1/systems/{system_id}/spans")
    async def ingest_spans(system_id: str, request: Request) -> Response:
        payload = await request.body()
        try:
            receipt = await asyncio.to_thread(
                services.store.ingest_batch, system_id, payload
            )
        except PayloadTooLarge as exc:
            return JSONResponse({"error": str(exc)}, status_code=413)
        except UnknownEncoding as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        return JSONResponse(
            {
                "accepted": receipt.accepted,
                "rejected": receipt.rejected,
                "rejection_reasons": [
                    {"line": line, "reason": reason}
                    for line, reason in receipt.rejection_reasons
                ],
            }
        )

    @app.get("/v1/systems")
    def list_systems() -> Response:
        return JSONResponse(
            [
                {
                    "system_id": info.system_id,
                    "display_name": info.display_name,
                    "first_seen_ns": info.first_seen_ns,
                    "last_seen_ns": info.last_seen_ns,
                    "span_count": info.span_count,
                }
                for info in services.store.list_systems()
            ]
        )

    @app.get("/v1/systems/{system_id}/snapshots")
    def list_snapshots(system_id: str) -> Response:
        try:
            snaps = services.snapshots.list_snapshots(system_id)
        except UnknownSystem:
            return JSONResponse({"error": "unknown system"}, status_code=404)
        return JSONResponse(
            [
                {
                    "snapshot_id": s.snapshot_id,
                    "window": {
                        "system_id": s.window.system_id,
                        "index": s.window.index,
                        "interval_ns": s.window.interval_ns,
                        "start_ns": s.window.start_ns,
                        "end_ns": s.window.end_ns,
                    },
                }
                for s in snaps
            ]
        )

    @app.get("/v1/systems/{system_id}/snapshots/latest")
    def latest_snapshot(system_id: str) -> Response:
        try:
            snapshot = services.snapshots.latest_snapshot(system_id)
        except UnknownSystem:
            return JSONResponse({"error": "unknown system"}, status_code=404)
        if snapshot is None:
            return JSONResponse({"error": "no closed window with data"}, status_code=404)
        return JSONResponse(snapshot_doc(snapshot))

    @app.get("/v1/snapshots/{snapshot_id}/diff/{other_id}")
    def diff_endpoint(snapshot_id: str, other_id: str) -> Response:
        if not services.snapshots.has(snapshot_id) or not services.snapshots.has(other_id):
            return JSONResponse({"error": "unknown snapshot"}, status_code=404)
        old = services.snapshots.load(snapshot_id)
        new = services.snapshots.load(other_id)
        try:
            return JSONResponse(diff_doc(diff_snapshots(old, new)))
        except SystemMismatch as exc:
            return JSONResponse({"error": "system mismatch: %s" % exc}, status_code=400)

    @app.get("/v1/snapshots/{snapshot_id}/layout")
    def snapshot_layout(snapshot_id: str) -> Response:
        if not services.snapshots.has(snapshot_id):
            return JSONResponse({"error": "unknown snapshot"}, status_code=404)
        snapshot = services.snapshots.load(snapshot_id)
        return JSONResponse(layout_doc(layout(snapshot)))

    @app.get("/v1/snapshots/{snapshot_id}/highlights")
    def snapshot_highlights(snapshot_id: str, file: str = Query(...)) -> Response:
        if not services.snapshots.has(snapshot_id):
            return JSONResponse({"error": "unknown snapshot"}, status_code=404)
        snapshot = services.snapshots.load(snapshot_id)
        source_map = services.source_map_for(snapshot.window.system_id, snapshot.landscape)
        markers = editor.highlights_for(snapshot, source_map, file)
        return JSONResponse([editor.marker_doc(m) for m in markers])

    @app.get("/v1/snapshots/{snapshot_id}")
    def get_snapshot(snapshot_id: str) -> Response:
        if not services.snapshots.has(snapshot_id):
            return JSONResponse({"error": "unknown snapshot"}, status_code=404)
        return JSONResponse(snapshot_doc(services.snapshots.load(snapshot_id)))

    @app.post("/v1/sessions")
    async def create_session(request: Request) -> Response:
        body = await request.body()
        host = "host"
        if body:
            try:
                host = json.loads(body).get("host", "host")
            except json.JSONDecodeError:
                return JSONResponse({"error": "invalid json"}, status_code=400)
        token = services.hub.create_session(host)
        return JSONResponse({"token": token}, status_code=201)

    @app.get("/v1/sessions/{token}/state")
    def session_state(token: str) -> Response:
        try:
            state = services.hub.state(token)
        except collab.UnknownSession:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        return JSONResponse(collab.state_doc(state))

    @app.websocket("/v1/sessions/{token}")
    async def session_socket(
        websocket: WebSocket, token: str, user: str = Query(...), resume: int = Query(0)
    ):
        await _run_session_socket(services, websocket, token, user, resume)

    @app.websocket("/v1/editor/{token}")
    async def editor_socket(
        websocket: WebSocket,
        token: str,
        user: str = Query(...),
        system: str = Query(None),
        resume: int = Query(0),
    ):
        await _run_editor_socket(services, websocket, token, user, system, resume)

    return app


# ---------------------------------------------------------------------------
# WebSocket channels
# ---------------------------------------------------------------------------

CLOSE_INVALID_PAYLOAD = 4400
CLOSE_UNKNOWN_SESSION = 4404


async def _attach(services: Services, websocket: WebSocket, token: str, user: str, resume: int):
    """Accept the socket and attach the user (joining the roster if new)."""
    hub = services.hub
    try:
        state = hub.state(token)
    except collab.UnknownSession:
        await websocket.accept()
        await websocket.close(code=CLOSE_UNKNOWN_SESSION)
        return None
    await websocket.accept()
    if user not in state.roster:
        try:
            _, resume = hub.join_session(token, user)
        except collab.DuplicateUser:
            pass  # raced with another connect for the same user
    conn = hub.connect(token, user, resume_from=resume)
    return conn


async def _pump(conn, translate, websocket: WebSocket) -> None:
    """Forward hub deliveries (translated) to the socket until cancelled."""
    while True:
        events = await asyncio.to_thread(conn.wait, 0.25)
        if conn.overflowed:
            await websocket.close(code=1013)
            return
        for event in events:
            message = translate(event)
            if message is not None:
                await websocket.send_text(json.dumps(message))


async def _run_session_socket(services, websocket, token, user, resume):
    conn = await _attach(services, websocket, token, user, resume)
    if conn is None:
        return
    hub = services.hub
    pump = asyncio.create_task(
        _pump(conn, lambda event: collab.event_doc(event), websocket)
    )
    try:
        while True:
            raw = await websocket.receive_text()
            try:
                frame = json.loads(raw)
                kind = frame["kind"]
                payload = frame.get("payload", {})
            except (json.JSONDecodeError, TypeError, KeyError):
                await websocket.close(code=CLOSE_INVALID_PAYLOAD)
                return
            try:
                hub.submit_event(token, user, kind, payload)
            except collab.InvalidPayload:
                await websocket.close(code=CLOSE_INVALID_PAYLOAD)
                return
            except (collab.NotAMember, collab.UnknownSession):
                await websocket.close(code=CLOSE_UNKNOWN_SESSION)
                return
    except WebSocketDisconnect:
        pass
    finally:
        pump.cancel()
        hub.disconnect(token, user)


async def _run_editor_socket(services, websocket, token, user, system, resume):
    conn = await _attach(services, websocket, token, user, resume)
    if conn is None:
        return
    hub = services.hub
    source_map = editor.SourceMap()
    if system:
        try:
            snapshot = services.snapshots.latest_snapshot(system)
        except UnknownSystem:
            snapshot = None
        if snapshot is not None:
            source_map = services.source_map_for(system, snapshot.landscape)

    def translate(event):
        directive = editor.sv_event_to_editor(source_map, event)
        return editor.directive_doc(directive) if directive else None

    pump = asyncio.create_task(_pump(conn, translate, websocket))
    try:
        while True:
            raw = await websocket.receive_text()
            try:
                frame = json.loads(raw)
                kind = frame["kind"]
                payload = frame.get("payload", {})
            except (json.JSONDecodeError, TypeError, KeyError):
                await websocket.close(code=CLOSE_INVALID_PAYLOAD)
                return
            if kind != "TextSelection":
                await websocket.close(code=CLOSE_INVALID_PAYLOAD)
                return
            try:
                hub.submit_event(token, user, kind, payload)
            except collab.InvalidPayload:
                await websocket.close(code=CLOSE_INVALID_PAYLOAD)
                return
            except (collab.NotAMember, collab.UnknownSession):
                await websocket.close(code=CLOSE_UNKNOWN_SESSION)
                return
    except WebSocketDisconnect:
        pass
    finally:
        pump.cancel()
        hub.disconnect(token, user)


# ---------------------------------------------------------------------------
# Outer ASGI composition
# ---------------------------------------------------------------------------


class TraceCityApp:
    """ASGI callable dispatching on the pure routing decision."""

    def __init__(self, config: ServerConfig, services: Services | None = None):
        self.config = config
        self.services = services or build_services(config)
        self.api = build_api(self.services)

    async def __call__(self, scope, receive, send):
        if scope["type"] == "lifespan":
            await self.api(scope, receive, send)
            return
        method = scope.get("method", "GET")
        decision = route(self.config, method, scope["path"])
        if isinstance(decision, Api):
            await self.api(scope, receive, send)
            return
        if scope["type"] == "websocket":
            await send({"type": "websocket.close", "code": CLOSE_UNKNOWN_SESSION})
            return
        if isinstance(decision, Proxy):
            await self._proxy(scope, receive, send, decision.upstream)
            return
        if isinstance(decision, Static):
            await FileResponse(decision.file_path)(scope, receive, send)
            return
        await PlainTextResponse("not found", status_code=404)(scope, receive, send)

    async def _proxy(self, scope, receive, send, upstream: str) -> None:
        body = b""
        more = True
        while more:
            message = await receive()
            body += message.get("body", b"")
            more = message.get("more_body", False)
        url = upstream.rstrip("/") + scope["path"]
        if scope.get("query_string"):
            url += "?" + scope["query_string"].decode()
        headers = [
            (k.decode(), v.decode())
            for k, v in scope.get("headers", [])
            if k.lower() not in (b"host", b"content-length")
        ]
        try:
            async with httpx.AsyncClient() as client:
                upstream_response = await client.request(
                    scope["method"], url, content=body, headers=headers, timeout=30.0
                )
        except httpx.HTTPError as exc:
            await PlainTextResponse("bad gateway: %s" % exc, status_code=502)(
                scope, receive, send
            )
            return
        response = Response(
            content=upstream_response.content,
            status_code=upstream_response.status_code,
            headers={
                k: v
                for k, v in upstream_response.headers.items()
                if k.lower() not in ("content-length", "transfer-encoding", "connection")
            },
        )
        await response(scope, receive, send)
