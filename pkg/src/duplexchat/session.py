"""The tick-driven duplex state machine.

A session interleaves two streams on a fixed clock: every tick consumes at
most one slice of buffered user input, asks the backend for at most one
output chunk, and records the (input, output) pair. User text submitted
while a generation call is in flight cancels that call: whatever it returns
is discarded, the tick records an idle output, and the next tick's context
already contains the new input. Ticks where both sides are silent leave no
trace in history.
"""

from __future__ import annotations

import logging
import random
import threading
import uuid
from dataclasses import dataclass, field

from .backends import (
    BackendError,
    CancelToken,
    Chunk,
    GeneratorBackend,
    IDLE_CHUNK,
    MalformedResponse,
)
from .protocol import SlicePair, encode_context, pair_unit_cost
from .slicing import (
    ASSISTANT,
    USER,
    Slice,
    SlicerConfig,
    Tokenizer,
    WordTokenizer,
    idle_slice,
    text_slice,
)

logger = logging.getLogger(__name__)

STATUS_IDLE = "idle"
STATUS_GENERATING = "generating"
STATUS_CANCELLED = "cancelled"


class InvalidConfig(ValueError):
    """A session parameter is out of range."""


class BackendUnavailable(RuntimeError):
    """The backend failed this tick; the tick itself was recorded as idle."""

    def __init__(self, cause: BackendError) -> None:
        super().__init__(str(cause))
        self.cause = cause


@dataclass(frozen=True)
class GenConfig:
    """Per-session knobs: cadence, chunk size, decoding, context budget."""

    tick_seconds: float = 2.0
    max_tokens_per_chunk: int = 10
    temperature: float = 0.8
    top_p: float = 0.8
    top_k: int = 0
    max_context: int = 4096
    slicer: SlicerConfig = field(default_factory=SlicerConfig)

    def validate(self) -> None:
        if self.tick_seconds <= 0:
            raise InvalidConfig("tick_seconds must be > 0")
        if self.max_tokens_per_chunk < 1:
            raise InvalidConfig("max_tokens_per_chunk must be >= 1")
        if self.temperature < 0:
            raise InvalidConfig("temperature must be >= 0")
        if not 0 <= self.top_p <= 1:
            raise InvalidConfig("top_p must be in [0, 1]")
        if self.top_k < 0:
            raise InvalidConfig("top_k must be >= 0 (0 disables it)")
        if self.max_context < 1:
            raise InvalidConfig("max_context must be >= 1")
        try:
            self.slicer.validate()
        except ValueError as exc:
            raise InvalidConfig(str(exc)) from exc


class DuplexSession:
    """One duplex conversation. submit_input may be called from any thread."""

    def __init__(
        self,
        config: GenConfig | None = None,
        session_id: str | None = None,
        tokenizer: Tokenizer | None = None,
    ) -> None:
        config = config or GenConfig()
        config.validate()
        self.session_id = session_id or uuid.uuid4().hex
        self.config = config
        self.history: list[SlicePair] = []
        self.total_units = 0
        self.tokenizer = tokenizer or WordTokenizer()
        self._pending: list[str] = []
        self._status = STATUS_IDLE
        self._rng = random.Random(config.slicer.rng_seed)
        self._lock = threading.RLock()
        self._epoch = 0
        self._inflight_cancel: CancelToken | None = None
        self._next_tick = 0

    @property
    def gen_status(self) -> str:
        with self._lock:
            return self._status

    @property
    def pending_input(self) -> str:
        with self._lock:
            return " ".join(self._pending)

    @property
    def next_tick_index(self) -> int:
        with self._lock:
            return self._next_tick

    def submit_input(self, text: str) -> None:
        """Buffer user text; takes effect no later than the next tick.

        If a generation call is in flight, it is cancelled and its result
        will be discarded, so the next context the backend sees already
        includes this text.
        """
        words = text.split()
        if not words:
            raise ValueError("input text must be non-empty")
        with self._lock:
            self._pending.extend(words)
            if self._status == STATUS_GENERATING:
                self._status = STATUS_CANCELLED
            self._epoch += 1
            if self._inflight_cancel is not None:
                self._inflight_cancel.cancel()

    def _consume_input(self) -> Slice:
        if not self._pending:
            return idle_slice(USER)
        cfg = self.config.slicer
        width = self._rng.randint(cfg.user_width_min, cfg.user_width_max)
        words = self._pending[:width]
        del self._pending[:width]
        return text_slice(USER, " ".join(words), len(words))

    def tick(self, backend: GeneratorBackend) -> Slice:
        """Run one tick against the backend and return the output slice.

        The session lock is released while the backend runs, so submit_input
        never blocks on generation. Raises BackendUnavailable after recording
        an idle output if the backend fails.
        """
        with self._lock:
            input_slice = self._consume_input()
            ctx = encode_context(self.history, input_slice)
            epoch = self._epoch
            cancel = CancelToken()
            self._inflight_cancel = cancel

        error: BackendError | None = None
        try:
            chunk = backend.generate(ctx, self.config, cancel)
            if not chunk.is_idle and chunk.unit_count > self.config.max_tokens_per_chunk:
                raise MalformedResponse(
                    f"backend emitted {chunk.unit_count} units, "
                    f"limit is {self.config.max_tokens_per_chunk}"
                )
        except BackendError as exc:
            chunk = IDLE_CHUNK
            error = exc

        with self._lock:
            self._inflight_cancel = None
            stale = self._epoch != epoch
            if stale:
                # input arrived mid-call: the result belongs to an outdated
                # context and must not surface
                chunk = IDLE_CHUNK
            output = self._chunk_to_slice(chunk)
            if not (input_slice.is_idle and output.is_idle):
                pair = SlicePair(
                    tick_index=self._next_tick,
                    input=input_slice,
                    output=output,
                    output_terminal=chunk.terminal and not chunk.is_idle,
                )
                self.history.append(pair)
                self._next_tick += 1
                self.total_units += pair_unit_cost(pair)
                self._evict()
            if not stale:
                self._status = self._status_from_history()
            if error is not None:
                logger.warning(
                    "session %s tick failed: %s", self.session_id, error
                )
                raise BackendUnavailable(error)
            return output

    @staticmethod
    def _chunk_to_slice(chunk: Chunk) -> Slice:
        if chunk.is_idle:
            return idle_slice(ASSISTANT)
        return text_slice(ASSISTANT, chunk.text, chunk.unit_count)

    def _status_from_history(self) -> str:
        if self.history:
            last = self.history[-1]
            if not last.output.is_idle and not last.output_terminal:
                return STATUS_GENERATING
        return STATUS_IDLE

    def _evict(self) -> None:
        while self.total_units > self.config.max_context and self.history:
            dropped = self.history.pop(0)
            self.total_units -= pair_unit_cost(dropped)

    def perceived_latency(self, query_end_tick: int) -> int | None:
        """Ticks from a query's final slice to the first non-idle output.

        Returns None when no response has followed yet. query_end_tick must
        not exceed the most recent recorded tick.
        """
        with self._lock:
            if query_end_tick < 0:
                raise ValueError("query_end_tick must be >= 0")
            if not self.history or query_end_tick > self.history[-1].tick_index:
                raise ValueError("query_end_tick is beyond recorded history")
            for pair in self.history:
                if pair.tick_index >= query_end_tick and not pair.output.is_idle:
                    return pair.tick_index - query_end_tick
        return None

    @classmethod
    def from_history(
        cls,
        config: GenConfig,
        pairs: list[SlicePair],
        session_id: str | None = None,
        tokenizer: Tokenizer | None = None,
    ) -> "DuplexSession":
        """Rebuild a session around an already recorded history."""
        session = cls(config=config, session_id=session_id, tokenizer=tokenizer)
        for pair in pairs:
            session.history.append(pair)
            session.total_units += pair_unit_cost(pair)
        if pairs:
            session._next_tick = pairs[-1].tick_index + 1
        session._status = session._status_from_history()
        session._evict()
        return session
