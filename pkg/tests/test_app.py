"""HTTP endpoints and the /duplex WebSocket, driven through the ASGI test client."""

import time

import pytest
from fastapi.testclient import TestClient
from starlette.websockets import WebSocketDisconnect

from duplexchat.backends import ScriptedBackend, ScriptedRule
from duplexchat.service.app import create_app
from duplexchat.service.config import ServiceConfig
from duplexchat.service.manager import SessionManager
from duplexchat.service.transcripts import TranscriptStore
from duplexchat.session import GenConfig
from duplexchat.slicing import SlicerConfig

TICK = 0.05


def build_app(tmp_path, auth_token=""):
    store = TranscriptStore(tmp_path / "transcripts")
    manager = SessionManager(
        backend_factory=lambda: ScriptedBackend(ScriptedRule.echo()),
        base_config=GenConfig(tick_seconds=TICK, slicer=SlicerConfig(rng_seed=2)),
        store=store,
    )
    config = ServiceConfig(
        auth_token=auth_token, transcript_dir=str(tmp_path / "transcripts")
    )
    return create_app(config, manager), manager


@pytest.fixture()
def service(tmp_path):
    app, manager = build_app(tmp_path)
    with TestClient(app) as client:
        yield client, manager


def open_frame(**extra):
    return {"direction": "client_to_server", "type": "open", **extra}


def collect_until(ws, predicate, limit=400):
    frames = []
    for _ in range(limit):
        frame = ws.receive_json()
        frames.append(frame)
        if predicate(frame):
            return frames
    raise AssertionError(f"condition never met, last frames: {frames[-5:]}")


def wait_for(condition, deadline_s=5.0):
    deadline = time.monotonic() + deadline_s
    while time.monotonic() < deadline:
        if condition():
            return True
        time.sleep(0.02)
    return False


def test_healthz(service):
    client, _ = service
    body = client.get("/healthz").json()
    assert body == {"status": "ok", "sessions": 0}


def test_rest_session_lifecycle(service):
    client, manager = service
    created = client.post("/sessions", json={})
    assert created.status_code == 201
    session_id = created.json()["session_id"]
    assert client.get("/healthz").json()["sessions"] == 1

    info = client.get(f"/sessions/{session_id}")
    assert info.status_code == 200
    body = info.json()
    assert body["session_id"] == session_id
    assert body["gen_status"] == "idle"
    assert body["recorded_pairs"] == 0
    assert body["tick_seconds"] == TICK

    closed = client.delete(f"/sessions/{session_id}")
    assert closed.json() == {"session_id": session_id, "closed": True}
    assert client.get(f"/sessions/{session_id}").status_code == 404
    assert client.delete(f"/sessions/{session_id}").status_code == 404
    assert client.get("/healthz").json()["sessions"] == 0
    assert manager.store.list_sessions()[session_id]["outcome"] == "closed"


def test_rest_open_with_overrides(service):
    client, manager = service
    created = client.post(
        "/sessions", json={"config": {"max_tokens_per_chunk": 5, "rng_seed": 9}}
    )
    session_id = created.json()["session_id"]
    session = manager.get(session_id).session
    assert session.config.max_tokens_per_chunk == 5
    assert session.config.slicer.rng_seed == 9


def test_rest_open_rejects_bad_config(service):
    client, _ = service
    assert (
        client.post("/sessions", json={"config": {"tick_seconds": -2}}).status_code
        == 400
    )
    assert (
        client.post("/sessions", json={"config": {"bogus_knob": 1}}).status_code == 422
    )


def test_rest_auth(tmp_path):
    app, _ = build_app(tmp_path, auth_token="letmein")
    with TestClient(app) as client:
        assert client.post("/sessions", json={}).status_code == 401
        assert client.post("/sessions", json={"token": "wrong"}).status_code == 401
        ok = client.post("/sessions", json={"token": "letmein"})
        assert ok.status_code == 201


def test_rest_history(service):
    client, manager = service
    session_id = client.post("/sessions", json={}).json()["session_id"]
    manager.submit(session_id, "hello over there?")

    def has_pair():
        rows = client.get(f"/sessions/{session_id}/history").json()["pairs"]
        return any(r["output"] for r in rows)

    assert wait_for(has_pair)
    rows = client.get(f"/sessions/{session_id}/history").json()["pairs"]
    assert rows[0]["input"] == "hello over there?"
    assert rows[0]["output"] == "hello over there?"
    assert rows[0]["terminal"] is True
    assert client.get("/sessions/nope/history").status_code == 404


def test_ws_echo_lifecycle(service):
    client, manager = service
    with client.websocket_connect("/duplex") as ws:
        ws.send_json(open_frame())
        ack = ws.receive_json()
        assert ack["type"] == "open"
        session_id = ack["session_id"]

        ws.send_json(
            {
                "direction": "client_to_server",
                "type": "input_chunk",
                "text": "hello over there?",
            }
        )
        frames = collect_until(ws, lambda f: f["type"] == "output_chunk")
        chunk = frames[-1]
        assert chunk["text"] == "hello over there?"
        assert chunk["terminal"] is True

        ws.send_json({"direction": "client_to_server", "type": "close"})
        frames += collect_until(ws, lambda f: f["type"] == "session_closed")

    ticks = [f["tick_index"] for f in frames if f["type"] in ("output_chunk", "idle_notice")]
    assert ticks == sorted(set(ticks)), "a wall tick was dropped or duplicated"
    transcript = manager.store.load(session_id)
    assert transcript.outcome == "closed"
    assert [p.output.text for p in transcript.pairs] == ["hello over there?"]
    replayed = manager.store.replay(session_id)
    assert list(replayed.history) == transcript.pairs


def test_ws_rejects_non_open_first_frame(service):
    client, _ = service
    with client.websocket_connect("/duplex") as ws:
        ws.send_json(
            {"direction": "client_to_server", "type": "input_chunk", "text": "hi"}
        )
        error = ws.receive_json()
        assert error["type"] == "error"
        assert "open" in error["error"]
        with pytest.raises(WebSocketDisconnect) as exc_info:
            ws.receive_json()
        assert exc_info.value.code == 1002


def test_ws_rejects_malformed_first_frame(service):
    client, _ = service
    with client.websocket_connect("/duplex") as ws:
        ws.send_json({"direction": "sideways", "type": "open"})
        error = ws.receive_json()
        assert error["type"] == "error"
        with pytest.raises(WebSocketDisconnect) as exc_info:
            ws.receive_json()
        assert exc_info.value.code == 1002


def test_ws_auth(tmp_path):
    app, _ = build_app(tmp_path, auth_token="letmein")
    with TestClient(app) as client:
        with client.websocket_connect("/duplex") as ws:
            ws.send_json(open_frame(token="nope"))
            assert ws.receive_json()["type"] == "error"
            with pytest.raises(WebSocketDisconnect) as exc_info:
                ws.receive_json()
            assert exc_info.value.code == 4401
        with client.websocket_connect("/duplex") as ws:
            ws.send_json(open_frame(token="letmein"))
            assert ws.receive_json()["type"] == "open"
            ws.send_json({"direction": "client_to_server", "type": "close"})
            collect_until(ws, lambda f: f["type"] == "session_closed")


def test_ws_attach_unknown_session(service):
    client, _ = service
    with client.websocket_connect("/duplex") as ws:
        ws.send_json(open_frame(session_id="ghost"))
        assert ws.receive_json()["type"] == "error"
        with pytest.raises(WebSocketDisconnect) as exc_info:
            ws.receive_json()
        assert exc_info.value.code == 4400


def test_ws_empty_input_is_an_error_frame(service):
    client, _ = service
    with client.websocket_connect("/duplex") as ws:
        ws.send_json(open_frame())
        ws.receive_json()
        ws.send_json(
            {"direction": "client_to_server", "type": "input_chunk", "text": "  "}
        )
        frames = collect_until(ws, lambda f: f["type"] == "error")
        assert "text" in frames[-1]["error"]
        ws.send_json({"direction": "client_to_server", "type": "close"})
        collect_until(ws, lambda f: f["type"] == "session_closed")


def test_ws_disconnect_reaps_owned_session(service):
    client, manager = service
    with client.websocket_connect("/duplex") as ws:
        ws.send_json(open_frame())
        session_id = ws.receive_json()["session_id"]
        # drop the socket without a close frame
    assert wait_for(lambda: manager.session_ids() == [])
    assert wait_for(
        lambda: manager.store.list_sessions().get(session_id, {}).get("outcome")
        == "disconnected"
    )


def test_ws_attached_session_survives_disconnect(service):
    client, manager = service
    session_id = client.post("/sessions", json={}).json()["session_id"]
    with client.websocket_connect("/duplex") as ws:
        ws.send_json(open_frame(session_id=session_id))
        ack = ws.receive_json()
        assert ack["session_id"] == session_id
    time.sleep(TICK * 4)
    assert session_id in manager.session_ids()
    client.delete(f"/sessions/{session_id}")
    assert wait_for(lambda: session_id not in manager.session_ids())
