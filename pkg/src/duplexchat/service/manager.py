"""Session lifecycle: one ticking driver per open session, frame fan-out, persistence."""

from __future__ import annotations

import asyncio
import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..backends import GeneratorBackend
from ..clock import Clock, RealClock
from ..session import BackendUnavailable, DuplexSession, GenConfig
from .schemas import SERVER_TO_CLIENT, ConfigOverrides, WireMessage
from .transcripts import TranscriptStore

logger = logging.getLogger(__name__)

Subscriber = Callable[[WireMessage], None]


@dataclass
class ManagedSession:
    session: DuplexSession
    backend: GeneratorBackend
    wall_tick: int = 0
    frames: list[WireMessage] = field(default_factory=list)
    pair_timestamps: list[float] = field(default_factory=list)
    subscribers: list[Subscriber] = field(default_factory=list)
    closed: bool = False
    driver_task: Optional[asyncio.Task] = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def session_id(self) -> str:
        return self.session.session_id


class SessionManager:
    """Owns every live session; safe to drive from threads or an event loop."""

    def __init__(
        self,
        backend_factory: Callable[[], GeneratorBackend],
        base_config: GenConfig | None = None,
        clock: Clock | None = None,
        store: TranscriptStore | None = None,
    ) -> None:
        self.backend_factory = backend_factory
        self.base_config = base_config or GenConfig()
        self.clock = clock or RealClock()
        self.store = store
        self._sessions: dict[str, ManagedSession] = {}
        self._lock = threading.Lock()

    def open_session(
        self, overrides: ConfigOverrides | None = None, session_id: str | None = None
    ) -> ManagedSession:
        """Create a session; InvalidConfig propagates for bad overrides."""
        config = overrides.apply(self.base_config) if overrides else self.base_config
        session = DuplexSession(config=config, session_id=session_id)
        managed = ManagedSession(session=session, backend=self.backend_factory())
        with self._lock:
            self._sessions[session.session_id] = managed
        logger.info("opened session %s", session.session_id)
        return managed

    def get(self, session_id: str) -> ManagedSession:
        with self._lock:
            managed = self._sessions.get(session_id)
        if managed is None:
            raise KeyError(f"no such session {session_id}")
        return managed

    def session_ids(self) -> list[str]:
        with self._lock:
            return list(self._sessions)

    def submit(self, session_id: str, text: str) -> None:
        self.get(session_id).session.submit_input(text)

    def subscribe(self, session_id: str, subscriber: Subscriber) -> None:
        managed = self.get(session_id)
        with managed.lock:
            managed.subscribers.append(subscriber)

    def unsubscribe(self, session_id: str, subscriber: Subscriber) -> None:
        try:
            managed = self.get(session_id)
        except KeyError:
            return
        with managed.lock:
            if subscriber in managed.subscribers:
                managed.subscribers.remove(subscriber)

    def _emit(self, managed: ManagedSession, frame: WireMessage) -> None:
        with managed.lock:
            managed.frames.append(frame)
            subscribers = list(managed.subscribers)
        for subscriber in subscribers:
            try:
                subscriber(frame)
            except Exception:
                logger.exception("subscriber failed for %s", managed.session_id)

    def tick_once(self, managed: ManagedSession) -> WireMessage:
        """Run one tick and emit exactly one output frame (plus error frames)."""
        timestamp = self.clock.now()
        session = managed.session
        before = session.next_tick_index
        try:
            output = session.tick(managed.backend)
        except BackendUnavailable as exc:
            self._emit(
                managed,
                WireMessage(
                    direction=SERVER_TO_CLIENT,
                    type="error",
                    session_id=managed.session_id,
                    tick_index=managed.wall_tick,
                    error=str(exc),
                    timestamp=timestamp,
                ),
            )
            output = None
        if session.next_tick_index > before:
            managed.pair_timestamps.append(timestamp)
        if output is not None and not output.is_idle:
            terminal = bool(session.history) and session.history[-1].output_terminal
            frame = WireMessage(
                direction=SERVER_TO_CLIENT,
                type="output_chunk",
                session_id=managed.session_id,
                tick_index=managed.wall_tick,
                text=output.text,
                terminal=terminal,
                timestamp=timestamp,
            )
        else:
            frame = WireMessage(
                direction=SERVER_TO_CLIENT,
                type="idle_notice",
                session_id=managed.session_id,
                tick_index=managed.wall_tick,
                timestamp=timestamp,
            )
        managed.wall_tick += 1
        self._emit(managed, frame)
        return frame

    async def drive(self, managed: ManagedSession) -> None:
        """Tick forever at the session's cadence until the session closes."""
        period = managed.session.config.tick_seconds
        try:
            while not managed.closed:
                await self.clock.async_sleep(period)
                if managed.closed:
                    break
                await asyncio.to_thread(self.tick_once, managed)
        except asyncio.CancelledError:
            pass

    def start_driver(self, managed: ManagedSession) -> None:
        """Begin ticking on the running event loop; idempotent per session."""
        if managed.driver_task is None or managed.driver_task.done():
            managed.driver_task = asyncio.get_running_loop().create_task(
                self.drive(managed)
            )

    def close_session(self, session_id: str, outcome: str = "closed") -> None:
        """Stop the driver, persist the transcript, notify, and forget."""
        with self._lock:
            managed = self._sessions.pop(session_id, None)
        if managed is None:
            return
        managed.closed = True
        if managed.driver_task is not None:
            managed.driver_task.cancel()
        if self.store is not None:
            try:
                self.store.save(
                    managed.session, managed.pair_timestamps, outcome=outcome
                )
            except IOError:
                logger.exception("could not persist transcript for %s", session_id)
        self._emit(
            managed,
            WireMessage(
                direction=SERVER_TO_CLIENT,
                type="session_closed",
                session_id=session_id,
                tick_index=managed.wall_tick,
                timestamp=self.clock.now(),
            ),
        )
        logger.info("closed session %s (%s)", session_id, outcome)

    def close_all(self, outcome: str = "shutdown") -> None:
        for session_id in self.session_ids():
            self.close_session(session_id, outcome=outcome)
