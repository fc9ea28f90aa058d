"""Segmentation of chat messages into per-tick slices and reassembly back into text."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Protocol

USER = "user"
ASSISTANT = "assistant"

TEXT = "text"
IDLE = "idle"


def normalize_ws(text: str) -> str:
    """Collapse runs of whitespace to single spaces and strip the ends."""
    return " ".join(text.split())


@dataclass(frozen=True)
class Slice:
    """One tick's worth of one stream: a fragment of text, or silence.

    unit_count is words for user slices and tokenizer tokens for assistant
    slices; idle slices carry no text and no units.
    """

    role: str
    kind: str
    text: str = ""
    unit_count: int = 0

    def __post_init__(self) -> None:
        if self.role not in (USER, ASSISTANT):
            raise ValueError(f"unknown role {self.role!r}")
        if self.kind == IDLE:
            if self.text or self.unit_count != 0:
                raise ValueError("idle slices carry no text")
        elif self.kind == TEXT:
            if not self.text:
                raise ValueError("text slices must be non-empty")
            if self.unit_count < 1:
                raise ValueError("text slices need unit_count >= 1")
        else:
            raise ValueError(f"unknown slice kind {self.kind!r}")

    @property
    def is_idle(self) -> bool:
        return self.kind == IDLE


def idle_slice(role: str) -> Slice:
    return Slice(role=role, kind=IDLE)


def text_slice(role: str, text: str, unit_count: int) -> Slice:
    return Slice(role=role, kind=TEXT, text=text, unit_count=unit_count)


@dataclass(frozen=True)
class SlicerConfig:
    """Slice-width policy: user slices in words, assistant slices in tokens."""

    user_width_min: int = 4
    user_width_max: int = 6
    assistant_chunk_tokens: int = 10
    rng_seed: int = 0

    def validate(self) -> None:
        if self.user_width_min < 1 or self.user_width_min > self.user_width_max:
            raise ValueError("need 1 <= user_width_min <= user_width_max")
        if self.assistant_chunk_tokens < 1:
            raise ValueError("assistant_chunk_tokens must be >= 1")


class Tokenizer(Protocol):
    """Maps text to an ordered token list and back.

    decode(encode(text)) must round-trip up to whitespace normalization.
    """

    def encode(self, text: str) -> list[str]: ...

    def decode(self, tokens: list[str]) -> str: ...


class WordTokenizer:
    """Default tokenizer: a token is a maximal run of non-whitespace."""

    def encode(self, text: str) -> list[str]:
        return text.split()

    def decode(self, tokens: list[str]) -> str:
        return " ".join(tokens)


def split_user_message(
    text: str,
    config: SlicerConfig | None = None,
    rng: random.Random | None = None,
) -> list[Slice]:
    """Cut a user message into slices of randomly drawn word widths.

    Widths are drawn uniformly from [user_width_min, user_width_max]; the
    final slice keeps whatever remains and may be shorter. When rng is not
    supplied, a fresh generator seeded from the config is used, so identical
    (text, config) always produce the identical split.
    """
    config = config or SlicerConfig()
    config.validate()
    words = text.split()
    if not words:
        return []
    if rng is None:
        rng = random.Random(config.rng_seed)
    slices: list[Slice] = []
    pos = 0
    while pos < len(words):
        width = rng.randint(config.user_width_min, config.user_width_max)
        chunk = words[pos : pos + width]
        slices.append(text_slice(USER, " ".join(chunk), len(chunk)))
        pos += width
    return slices


def split_assistant_message(
    text: str,
    tokenizer: Tokenizer | None = None,
    config: SlicerConfig | None = None,
) -> list[Slice]:
    """Cut an assistant message into fixed-size token chunks (last may be short)."""
    config = config or SlicerConfig()
    config.validate()
    tokenizer = tokenizer or WordTokenizer()
    tokens = tokenizer.encode(text)
    if not tokens:
        return []
    step = config.assistant_chunk_tokens
    slices: list[Slice] = []
    for start in range(0, len(tokens), step):
        chunk = tokens[start : start + step]
        slices.append(text_slice(ASSISTANT, tokenizer.decode(chunk), len(chunk)))
    return slices


def reassemble(slices: Iterable[Slice]) -> str:
    """Join the text slices of one stream back into a message, skipping idles."""
    return normalize_ws(" ".join(s.text for s in slices if not s.is_idle))
