"""HTTP and WebSocket surface over the session manager.

REST endpoints open, inspect, and close sessions; the /duplex WebSocket
carries the live conversation: the client sends open and input_chunk
frames, the server answers with exactly one output_chunk or idle_notice
per tick, plus error and session_closed frames as they occur.
"""

from __future__ import annotations

import asyncio
import contextlib
import logging

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import ValidationError

from ..backends import RemoteBackend, ScriptedBackend
from ..session import InvalidConfig
from .config import ServiceConfig
from .manager import ManagedSession, SessionManager
from .schemas import (
    CLIENT_TO_SERVER,
    OpenSessionRequest,
    PairRecord,
    SERVER_TO_CLIENT,
    SessionHistory,
    SessionInfo,
    WireMessage,
)
from .transcripts import TranscriptStore

logger = logging.getLogger(__name__)


def _default_manager(config: ServiceConfig) -> SessionManager:
    if config.backend == "remote":
        backend_factory = lambda: RemoteBackend(config.remote)  # noqa: E731
    else:
        backend_factory = ScriptedBackend
    return SessionManager(
        backend_factory=backend_factory,
        base_config=config.gen,
        store=TranscriptStore(config.transcript_dir),
    )


def _session_info(managed: ManagedSession) -> SessionInfo:
    session = managed.session
    return SessionInfo(
        session_id=session.session_id,
        gen_status=session.gen_status,
        wall_tick=managed.wall_tick,
        recorded_pairs=len(session.history),
        total_units=session.total_units,
        tick_seconds=session.config.tick_seconds,
    )


def create_app(
    config: ServiceConfig | None = None, manager: SessionManager | None = None
) -> FastAPI:
    config = config or ServiceConfig()
    manager = manager or _default_manager(config)

    @contextlib.asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        manager.close_all()

    app = FastAPI(title="duplexchat", version="0.1.0", lifespan=lifespan)
    app.state.manager = manager
    app.state.config = config

    def check_token(token: str | None) -> bool:
        return not config.auth_token or token == config.auth_token

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "sessions": len(manager.session_ids())}

    @app.post("/sessions", status_code=201)
    async def open_session(request: OpenSessionRequest) -> dict:
        if not check_token(request.token):
            raise HTTPException(status_code=401, detail="bad token")
        try:
            managed = manager.open_session(request.config)
        except InvalidConfig as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        manager.start_driver(managed)
        return {"session_id": managed.session_id}

    @app.get("/sessions/{session_id}")
    def session_info(session_id: str) -> SessionInfo:
        try:
            managed = manager.get(session_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return _session_info(managed)

    @app.get("/sessions/{session_id}/history")
    def session_history(session_id: str) -> SessionHistory:
        try:
            managed = manager.get(session_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        pairs = [
            PairRecord(
                i=p.tick_index,
                input=None if p.input.is_idle else p.input.text,
                output=None if p.output.is_idle else p.output.text,
                terminal=p.output_terminal,
            )
            for p in managed.session.history
        ]
        return SessionHistory(session_id=session_id, pairs=pairs)

    @app.delete("/sessions/{session_id}")
    def close_session(session_id: str) -> dict:
        try:
            manager.get(session_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        manager.close_session(session_id)
        return {"session_id": session_id, "closed": True}

    @app.websocket("/duplex")
    async def duplex(ws: WebSocket) -> None:
        await ws.accept()
        loop = asyncio.get_running_loop()
        queue: asyncio.Queue[WireMessage] = asyncio.Queue()
        managed: ManagedSession | None = None
        owns_session = False

        def subscriber(frame: WireMessage) -> None:
            loop.call_soon_threadsafe(queue.put_nowait, frame)

        async def send_error(message: str) -> None:
            await ws.send_json(
                WireMessage(
                    direction=SERVER_TO_CLIENT, type="error", error=message
                ).model_dump(exclude_none=True)
            )

        try:
            raw = await ws.receive_json()
            try:
                frame = WireMessage.model_validate(raw)
            except ValidationError as exc:
                await send_error(f"bad frame: {exc.errors()[0]['msg']}")
                await ws.close(code=1002)
                return
            if frame.type != "open" or frame.direction != CLIENT_TO_SERVER:
                await send_error("first frame must be a client open")
                await ws.close(code=1002)
                return
            if not check_token(frame.token):
                await send_error("bad token")
                await ws.close(code=4401)
                return
            try:
                if frame.session_id:
                    managed = manager.get(frame.session_id)
                else:
                    managed = manager.open_session(frame.config)
                    owns_session = True
            except (InvalidConfig, KeyError) as exc:
                await send_error(str(exc))
                await ws.close(code=4400)
                return
            manager.subscribe(managed.session_id, subscriber)
            manager.start_driver(managed)
            await ws.send_json(
                WireMessage(
                    direction=SERVER_TO_CLIENT,
                    type="open",
                    session_id=managed.session_id,
                    tick_index=managed.wall_tick,
                ).model_dump(exclude_none=True)
            )

            async def pump_outgoing() -> None:
                while True:
                    frame = await queue.get()
                    await ws.send_json(frame.model_dump(exclude_none=True))
                    if frame.type == "session_closed":
                        return

            async def pump_incoming() -> None:
                while True:
                    raw = await ws.receive_json()
                    try:
                        incoming = WireMessage.model_validate(raw)
                    except ValidationError as exc:
                        await send_error(f"bad frame: {exc.errors()[0]['msg']}")
                        continue
                    if incoming.type == "input_chunk":
                        if not incoming.text or not incoming.text.strip():
                            await send_error("input_chunk needs text")
                            continue
                        manager.submit(managed.session_id, incoming.text)
                    elif incoming.type == "close":
                        manager.close_session(managed.session_id)
                        return
                    else:
                        await send_error(f"unexpected {incoming.type} frame")

            outgoing = asyncio.create_task(pump_outgoing())
            incoming_task = asyncio.create_task(pump_incoming())
            try:
                done, _ = await asyncio.wait(
                    {outgoing, incoming_task}, return_when=asyncio.FIRST_COMPLETED
                )
                if (
                    incoming_task in done
                    and incoming_task.exception() is None
                    and outgoing not in done
                ):
                    # clean close: give the sender a moment to flush the
                    # session_closed frame before tearing down
                    with contextlib.suppress(asyncio.TimeoutError):
                        await asyncio.wait_for(asyncio.shield(outgoing), timeout=5)
                for task in done:
                    exc = task.exception()
                    if exc is not None and not isinstance(
                        exc, (WebSocketDisconnect, RuntimeError)
                    ):
                        raise exc
            finally:
                for task in (outgoing, incoming_task):
                    if not task.done():
                        task.cancel()
                    with contextlib.suppress(
                        asyncio.CancelledError, WebSocketDisconnect, RuntimeError
                    ):
                        await task
        except WebSocketDisconnect:
            pass
        finally:
            if managed is not None:
                manager.unsubscribe(managed.session_id, subscriber)
                # a dropped socket takes the session it opened with it;
                # attached sessions keep running for their other clients
                if owns_session and managed.session_id in manager.session_ids():
                    manager.close_session(managed.session_id, outcome="disconnected")

    return app
