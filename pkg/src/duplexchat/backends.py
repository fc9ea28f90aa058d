"""Chunk generators driven once per tick.

Two implementations: a scripted, referentially transparent test double that
replays the decoded context through a rule table, and a remote client that
streams one chunk from an OpenAI-style chat-completions endpoint.
"""

from __future__ import annotations

import abc
import json
import logging
import os
import threading
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

import httpx

from .protocol import IDLE_MARK, SlicePair, decode_context
from .slicing import Slice, Tokenizer, WordTokenizer

if TYPE_CHECKING:
    from .session import GenConfig

logger = logging.getLogger(__name__)


class BackendError(Exception):
    """Base class for generation failures."""


class BackendTimeout(BackendError):
    pass


class BackendHTTPError(BackendError):
    pass


class MalformedResponse(BackendError):
    pass


@dataclass(frozen=True)
class Chunk:
    """One tick's generation result: silence, or a bounded run of tokens."""

    kind: str
    text: str = ""
    unit_count: int = 0
    terminal: bool = False

    @property
    def is_idle(self) -> bool:
        return self.kind == "idle"


IDLE_CHUNK = Chunk(kind="idle")


def text_chunk(text: str, unit_count: int, terminal: bool) -> Chunk:
    return Chunk(kind="text", text=text, unit_count=unit_count, terminal=terminal)


class CancelToken:
    """Cooperative cancellation flag shared between a session and an in-flight call."""

    def __init__(self) -> None:
        self._event = threading.Event()

    def cancel(self) -> None:
        self._event.set()

    @property
    def cancelled(self) -> bool:
        return self._event.is_set()


class GeneratorBackend(abc.ABC):
    """Produces at most max_tokens_per_chunk units per call."""

    @abc.abstractmethod
    def generate(
        self, ctx: str, config: "GenConfig", cancel: CancelToken | None = None
    ) -> Chunk:
        """Return the next output chunk for the encoded context."""


def ends_with_terminator(text: str) -> bool:
    """Default query-completeness test: the text closes with sentence punctuation."""
    return text.rstrip().endswith((".", "?", "!"))


def _restate(query: str) -> str:
    return (
        f"You asked about the following: {query} "
        "Here is a considered answer that walks through the point step by step "
        "and then wraps up cleanly."
    )


@dataclass
class ScriptedRule:
    """Deterministic behavior table for the scripted backend.

    interruption picks what happens when user text arrives mid-response:
    "terminate" abandons the rest, "answer_then_resume" answers the new text
    first and then continues the abandoned response. response_delay_ticks may
    be 0 (respond the tick a query completes) or 1 (respond the next tick);
    longer delays are not derivable from recorded history because fully idle
    ticks leave no trace.
    """

    completeness: Callable[[str], bool] = ends_with_terminator
    template: Callable[[str], str] = _restate
    interruption: str = "terminate"
    response_delay_ticks: int = 0

    def __post_init__(self) -> None:
        if self.interruption not in ("terminate", "answer_then_resume"):
            raise ValueError(f"unknown interruption policy {self.interruption!r}")
        if self.response_delay_ticks not in (0, 1):
            raise ValueError("response_delay_ticks must be 0 or 1")

    @classmethod
    def echo(cls, **kwargs) -> "ScriptedRule":
        """Respond by repeating the query verbatim."""
        return cls(template=lambda query: query, **kwargs)


class ScriptedBackend(GeneratorBackend):
    """Replays the rule table over the decoded context.

    The backend keeps no state between calls: everything is reconstructed
    from the context string, so identical contexts always yield identical
    chunks. unit_hook, when set, is called once before each emitted unit;
    tests use it to interleave input submission with an in-flight call.
    """

    def __init__(
        self,
        rule: ScriptedRule | None = None,
        tokenizer: Tokenizer | None = None,
        unit_hook: Callable[[int], None] | None = None,
    ) -> None:
        self.rule = rule or ScriptedRule()
        self.tokenizer = tokenizer or WordTokenizer()
        self.unit_hook = unit_hook

    def generate(
        self, ctx: str, config: "GenConfig", cancel: CancelToken | None = None
    ) -> Chunk:
        history, new_input = decode_context(ctx, self.tokenizer)
        query, answering, waited, resume = self._replay(history, new_input)
        if answering is None:
            joined = " ".join(query)
            if not query or not self.rule.completeness(joined):
                return IDLE_CHUNK
            if waited < self.rule.response_delay_ticks:
                return IDLE_CHUNK
            answering = self._start_response(joined, resume)
        limit = config.max_tokens_per_chunk
        emitted: list[str] = []
        for token in answering[:limit]:
            if self.unit_hook is not None:
                self.unit_hook(len(emitted))
            if cancel is not None and cancel.cancelled:
                return IDLE_CHUNK
            emitted.append(token)
        terminal = len(answering) <= limit
        return text_chunk(self.tokenizer.decode(emitted), len(emitted), terminal)

    def _start_response(self, query: str, resume: list[str]) -> list[str]:
        tokens = self.tokenizer.encode(self.rule.template(query))
        if not tokens:
            raise ValueError("scripted template produced an empty response")
        return tokens + resume

    def _replay(
        self, history: list[SlicePair], new_input: Slice
    ) -> tuple[list[str], list[str] | None, int, list[str]]:
        """Walk the recorded ticks and recover the generator's implied state.

        Returns the accumulated query words, the remaining tokens of the
        active response (None when no response is in flight), how many
        recorded idle ticks the completed query has already waited, and any
        stashed tail a future response must resume.
        """
        rule = self.rule
        query: list[str] = []
        answering: list[str] | None = None
        resume: list[str] = []
        waited = 0

        def on_input(s: Slice) -> None:
            nonlocal query, answering, resume, waited
            if s.is_idle:
                return
            words = s.text.split()
            if answering is not None:
                if rule.interruption == "answer_then_resume":
                    resume = list(answering) + resume
                answering = None
                query = words
            else:
                query.extend(words)
            waited = 0

        for pair in history:
            on_input(pair.input)
            out = pair.output
            if out.is_idle:
                if (
                    answering is None
                    and query
                    and rule.completeness(" ".join(query))
                ):
                    waited += 1
                continue
            if answering is None:
                answering = self._start_response(" ".join(query), resume)
                query = []
                resume = []
                waited = 0
            answering = answering[out.unit_count :]
            if pair.output_terminal or not answering:
                answering = None
        on_input(new_input)
        return query, answering, waited, resume


@dataclass
class RemoteBackendConfig:
    """Connection settings for an OpenAI-style streaming chat endpoint."""

    endpoint: str
    model: str = ""
    auth_env: str = ""
    timeout_s: float = 30.0
    idle_marker: str = IDLE_MARK

    def validate(self) -> None:
        if not self.endpoint:
            raise ValueError("endpoint is required")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")


class RemoteBackend(GeneratorBackend):
    """Streams one chunk per call from a chat-completions endpoint.

    The encoded context travels as a single user message. Streamed deltas
    count as units; the stream is closed once max_tokens_per_chunk units have
    arrived (non-terminal) or the provider reports finish_reason "stop"
    (terminal). A response whose text starts with the idle marker counts as
    an idle tick. The bearer token is read from the environment variable
    named by auth_env and never logged.
    """

    def __init__(
        self,
        config: RemoteBackendConfig,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        config.validate()
        self.config = config
        self._transport = transport

    def _headers(self) -> dict[str, str]:
        headers = {"content-type": "application/json"}
        if self.config.auth_env:
            token = os.environ.get(self.config.auth_env, "")
            if token:
                headers["authorization"] = f"Bearer {token}"
        return headers

    def _payload(self, ctx: str, config: "GenConfig") -> dict:
        payload: dict = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": ctx}],
            "stream": True,
            "temperature": config.temperature,
            "top_p": config.top_p,
        }
        if config.top_k > 0:
            payload["top_k"] = config.top_k
        return payload

    def generate(
        self, ctx: str, config: "GenConfig", cancel: CancelToken | None = None
    ) -> Chunk:
        logger.debug(
            "remote generate: endpoint=%s model=%s ctx_chars=%d",
            self.config.endpoint,
            self.config.model,
            len(ctx),
        )
        pieces: list[str] = []
        units = 0
        terminal = False
        try:
            with httpx.Client(
                timeout=self.config.timeout_s, transport=self._transport
            ) as client:
                with client.stream(
                    "POST",
                    self.config.endpoint,
                    json=self._payload(ctx, config),
                    headers=self._headers(),
                ) as response:
                    if response.status_code != 200:
                        raise BackendHTTPError(
                            f"endpoint returned HTTP {response.status_code}"
                        )
                    for line in response.iter_lines():
                        if cancel is not None and cancel.cancelled:
                            return IDLE_CHUNK
                        if not line.startswith("data:"):
                            continue
                        data = line[len("data:") :].strip()
                        if data == "[DONE]":
                            break
                        delta, finish = self._parse_event(data)
                        if delta:
                            pieces.append(delta)
                            units += 1
                        if finish == "stop":
                            terminal = True
                            break
                        if units >= config.max_tokens_per_chunk:
                            break
        except httpx.TimeoutException as exc:
            raise BackendTimeout(str(exc)) from exc
        except httpx.HTTPError as exc:
            raise BackendHTTPError(str(exc)) from exc

        text = "".join(pieces).strip()
        if not text or text.startswith(self.config.idle_marker):
            return IDLE_CHUNK
        return text_chunk(text, units, terminal)

    @staticmethod
    def _parse_event(data: str) -> tuple[str, str | None]:
        try:
            obj = json.loads(data)
            choice = obj["choices"][0]
            delta = choice.get("delta", {}).get("content") or ""
            finish = choice.get("finish_reason")
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"bad stream event: {data[:120]!r}") from exc
        return delta, finish
