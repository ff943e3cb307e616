import json
import socket
import threading
import time

import httpx
import pytest
from fastapi.testclient import TestClient

from tracecity.ingest import span_to_wire
from tracecity.server import (
    Api,
    NotFound,
    Proxy,
    ProxyRule,
    ServerConfig,
    Static,
    TraceCityApp,
    build_services,
    route,
)
from tracecity.snapshots import DEFAULT_INTERVAL_NS

from conftest import BASE_NS, make_span, random_span_population


def lines_for(spans):
    return "\n".join(json.dumps(span_to_wire(s)) for s in spans) + "\n"


# ---------------------------------------------------------------------------
# route()
# ---------------------------------------------------------------------------


def test_route_api_table():
    config = ServerConfig()
    assert route(config, "GET", "/v1/systems") == Api("list_systems")
    assert route(config, "POST", "/v1/systems/petclinic/spans") == Api("ingest_spans")
    assert route(config, "GET", "/v1/snapshots/abc") == Api("get_snapshot")
    assert route(config, "GET", "/v1/snapshots/a/diff/b") == Api("diff_snapshots")
    assert route(config, "GET", "/v1/snapshots/a/layout") == Api("snapshot_layout")
    assert route(config, "GET", "/v1/sessions/tok") == Api("session_socket")
    assert route(config, "GET", "/v1/sessions/tok/state") == Api("session_state")
    assert route(config, "GET", "/healthz") == Api("healthz")


def test_route_static(tmp_path):
    (tmp_path / "assets").mkdir()
    (tmp_path / "assets" / "app.css").write_text("body{}")
    (tmp_path / "index.html").write_text("<html></html>")
    config = ServerConfig(static_root=str(tmp_path))
    assert route(config, "GET", "/assets/app.css") == Static(
        str(tmp_path / "assets" / "app.css")
    )
    assert route(config, "GET", "/") == Static(str(tmp_path / "index.html"))
    assert route(config, "GET", "/missing.js") == NotFound()
    # path traversal cannot escape the static root
    assert route(config, "GET", "/../secret") == NotFound()


def test_route_proxy_longest_prefix():
    config = ServerConfig(
        proxy_rules=(
            ProxyRule("/collab", "http://upstream-a"),
            ProxyRule("/collab/deep", "http://upstream-b"),
        )
    )
    assert route(config, "GET", "/collab/x") == Proxy("http://upstream-a")
    assert route(config, "GET", "/collab/deep/x") == Proxy("http://upstream-b")
    # proxy rules shadow even the API table
    shadowing = ServerConfig(proxy_rules=(ProxyRule("/v1", "http://elsewhere"),))
    assert route(shadowing, "GET", "/v1/systems") == Proxy("http://elsewhere")


def test_route_total_and_deterministic():
    config = ServerConfig()
    for request in [("GET", "/nope"), ("PUT", "/v1/systems"), ("GET", "/v1")]:
        assert route(config, *request) == route(config, *request) == NotFound()


def test_config_validation():
    with pytest.raises(ValueError):
        ServerConfig(commit_interval_ns=0)
    with pytest.raises(ValueError):
        ServerConfig(proxy_rules=(ProxyRule("/a", "u"), ProxyRule("/a", "v")))


# ---------------------------------------------------------------------------
# HTTP endpoints
# ---------------------------------------------------------------------------


@pytest.fixture
def app(tmp_path):
    config = ServerConfig(data_dir=str(tmp_path / "data"), static_root=None)
    return TraceCityApp(config)


@pytest.fixture
def client(app):
    with TestClient(app) as test_client:
        yield test_client


def test_healthz(client):
    response = client.get("/healthz")
    assert response.status_code == 200 and response.text == "ok"


def test_ingest_and_systems_roundtrip(client, rng):
    spans = random_span_population(rng, 25, 3)
    response = client.post("/v1/systems/petclinic/spans", content=lines_for(spans))
    assert response.status_code == 200
    doc = response.json()
    assert doc["accepted"] == 25 and doc["rejected"] == 0

    bad = client.post("/v1/systems/petclinic/spans", content="junk\n")
    assert bad.status_code == 200
    assert bad.json()["rejected"] == 1

    systems = client.get("/v1/systems").json()
    assert [s["system_id"] for s in systems] == ["petclinic"]
    assert systems[0]["span_count"] == 25


def test_snapshot_endpoints(client, rng):
    spans = random_span_population(rng, 80, 8)  # BASE_NS is long closed
    client.post("/v1/systems/petclinic/spans", content=lines_for(spans))

    latest = client.get("/v1/systems/petclinic/snapshots/latest")
    assert latest.status_code == 200
    snapshot_id = latest.json()["snapshot_id"]

    listing = client.get("/v1/systems/petclinic/snapshots").json()
    assert any(s["snapshot_id"] == snapshot_id for s in listing)

    by_id = client.get("/v1/snapshots/%s" % snapshot_id)
    assert by_id.json() == latest.json()

    city = client.get("/v1/snapshots/%s/layout" % snapshot_id).json()
    assert set(city) == {"districts", "buildings", "arcs"}
    assert len(city["buildings"]) > 0

    diff = client.get("/v1/snapshots/%s/diff/%s" % (snapshot_id, snapshot_id)).json()
    assert diff == {"added_entities": [], "removed_entities": [], "edge_deltas": []}

    assert client.get("/v1/snapshots/nope").status_code == 404
    assert client.get("/v1/systems/ghost/snapshots/latest").status_code == 404


def test_latest_snapshot_404_when_nothing_closed(client):
    future_ns = time.time_ns() + 3600 * 10**9
    span = make_span(1, 0, start_ns=future_ns)
    client.post("/v1/systems/petclinic/spans", content=lines_for([span]))
    assert client.get("/v1/systems/petclinic/snapshots/latest").status_code == 404


def test_payload_too_large(tmp_path):
    config = ServerConfig(data_dir=str(tmp_path / "data"))
    app = TraceCityApp(config)
    app.services.store.max_payload = 64
    with TestClient(app) as client:
        response = client.post("/v1/systems/x/spans", content=b"y" * 100)
        assert response.status_code == 413


def test_static_served_through_app(tmp_path):
    static = tmp_path / "static"
    static.mkdir()
    (static / "index.html").write_text("<h1>city</h1>")
    config = ServerConfig(data_dir=str(tmp_path / "data"), static_root=str(static))
    with TestClient(TraceCityApp(config)) as client:
        assert client.get("/").text == "<h1>city</h1>"
        assert client.get("/missing.png").status_code == 404


def test_highlights_endpoint_with_workspace_index(client, app, rng, tmp_path):
    spans = [
        make_span(1, 0, fqn="org.samples.model.Owner.<init>"),
        make_span(2, 0, parent="0000000000000001", fqn="org.samples.model.Owner.getName", start_ns=BASE_NS + 10),
    ]
    client.post("/v1/systems/petclinic/spans", content=lines_for(spans))
    index_doc = [
        {
            "path": "src/Owner.java",
            "package_decl": "org.samples.model",
            "classes": [
                {
                    "name": "Owner",
                    "line": 4,
                    "methods": [
                        {"name": "<init>", "line": 7},
                        {"name": "getName", "line": 11},
                    ],
                }
            ],
        }
    ]
    index_path = app.services.data_dir / "petclinic" / "workspace_index.json"
    index_path.parent.mkdir(parents=True, exist_ok=True)
    index_path.write_text(json.dumps(index_doc))

    snapshot_id = client.get("/v1/systems/petclinic/snapshots/latest").json()["snapshot_id"]
    markers = client.get(
        "/v1/snapshots/%s/highlights" % snapshot_id, params={"file": "src/Owner.java"}
    ).json()
    kinds = [(m["kind"], m["line"]) for m in markers]
    assert ("class", 4) in kinds and ("method", 11) in kinds
    assert all(m["call_count"] >= 1 for m in markers)


# ---------------------------------------------------------------------------
# sessions over HTTP + WebSocket
# ---------------------------------------------------------------------------


def test_session_http_lifecycle(client):
    created = client.post("/v1/sessions", json={"host": "alice"})
    assert created.status_code == 201
    token = created.json()["token"]
    state = client.get("/v1/sessions/%s/state" % token).json()
    assert state["roster"] == ["alice"] and state["last_seq"] == 1
    assert client.get("/v1/sessions/nope/state").status_code == 404


def test_session_websocket_broadcast(client):
    token = client.post("/v1/sessions", json={"host": "alice"}).json()["token"]
    with client.websocket_connect(
        "/v1/sessions/%s?user=alice&resume=1" % token
    ) as alice:
        with client.websocket_connect("/v1/sessions/%s?user=bob" % token) as bob:
            # bob's join was broadcast to alice
            joined = json.loads(alice.receive_text())
            assert joined["kind"] == "UserJoined" and joined["payload"]["user"] == "bob"

            alice.send_text(json.dumps({"kind": "Ping", "payload": {"entity_id": "e1"}}))
            ping = json.loads(bob.receive_text())
            assert ping["kind"] == "Ping"
            assert ping["origin_user"] == "alice"

            bob.send_text(
                json.dumps(
                    {"kind": "PackageOpened", "payload": {"entity_id": "p1"}}
                )
            )
            opened = json.loads(alice.receive_text())
            assert opened["kind"] == "PackageOpened"
    state = client.get("/v1/sessions/%s/state" % token).json()
    assert state["open_packages"] == ["p1"]


def test_session_websocket_unknown_session(client):
    with pytest.raises(Exception):
        with client.websocket_connect("/v1/sessions/doesnotexist?user=x") as ws:
            ws.receive_text()


def test_editor_websocket_directives(client):
    token = client.post("/v1/sessions", json={"host": "ed1"}).json()["token"]
    with client.websocket_connect("/v1/editor/%s?user=ed1&resume=1" % token) as ed1:
        with client.websocket_connect("/v1/editor/%s?user=ed2" % token) as ed2:
            ed1.send_text(
                json.dumps(
                    {
                        "kind": "TextSelection",
                        "payload": {"file": "Owner.java", "range": {"start_line": 3}},
                    }
                )
            )
            directive = json.loads(ed2.receive_text())
            assert directive["kind"] == "HighlightSelection"
            assert directive["payload"]["file"] == "Owner.java"
            assert directive["payload"]["user"] == "ed1"


# ---------------------------------------------------------------------------
# reverse proxy against a live upstream
# ---------------------------------------------------------------------------


def _free_port():
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.mark.slow
def test_reverse_proxy_roundtrip(tmp_path):
    import uvicorn

    async def upstream_app(scope, receive, send):
        if scope["type"] != "http":
            return
        await send(
            {
                "type": "http.response.start",
                "status": 200,
                "headers": [(b"content-type", b"text/plain")],
            }
        )
        await send({"type": "http.response.body", "body": b"upstream:" + scope["path"].encode()})

    port = _free_port()
    upstream = uvicorn.Server(
        uvicorn.Config(upstream_app, host="127.0.0.1", port=port, log_level="error")
    )
    thread = threading.Thread(target=upstream.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not upstream.started:
        if time.time() > deadline:
            pytest.fail("upstream server did not start")
        time.sleep(0.02)

    try:
        config = ServerConfig(
            data_dir=str(tmp_path / "data"),
            proxy_rules=(ProxyRule("/collab", "http://127.0.0.1:%d" % port),),
        )
        with TestClient(TraceCityApp(config)) as client:
            response = client.get("/collab/x")
            assert response.status_code == 200
            assert response.text == "upstream:/collab/x"
    finally:
        upstream.should_exit = True
        thread.join(timeout=5)
