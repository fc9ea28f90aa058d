"""Serialization of slice-pair history into the single string a backend consumes.

The format interleaves both streams tick by tick:

    <t:N> (<in> payload <out> payload [<eos>])* <in> payload <out>

where N is the tick index of the first pair (history may have been evicted
from the front), each payload is either literal text or the <idle> marker,
and <eos> closes a completed assistant response. The trailing group carries
the current tick's input and an empty output: that is where the backend
continues. Literal "<" in payload text is escaped as "<<", so decoding is
exact and encode/decode form a bijection.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .slicing import (
    ASSISTANT,
    USER,
    Slice,
    Tokenizer,
    WordTokenizer,
    idle_slice,
    text_slice,
)

IN_MARK = "<in>"
OUT_MARK = "<out>"
IDLE_MARK = "<idle>"
EOS_MARK = "<eos>"

_TICK_HEADER = re.compile(r"<t:(\d+)>")
_KNOWN_MARKS = (IN_MARK, OUT_MARK, IDLE_MARK, EOS_MARK)


class EncodingError(ValueError):
    """The string is not a well-formed encoded context."""


@dataclass(frozen=True)
class SlicePair:
    """One tick of conversation: the input consumed and the output produced."""

    tick_index: int
    input: Slice
    output: Slice
    output_terminal: bool = False

    def __post_init__(self) -> None:
        if self.tick_index < 0:
            raise ValueError("tick_index must be >= 0")
        if self.input.role != USER:
            raise ValueError("pair input must be a user slice")
        if self.output.role != ASSISTANT:
            raise ValueError("pair output must be an assistant slice")
        if self.output_terminal and self.output.is_idle:
            raise ValueError("an idle output cannot be terminal")


def pair_unit_cost(pair: SlicePair) -> int:
    """Context budget charged for one pair: framing marks count one unit each."""
    cost = 2  # <in> and <out>
    cost += 1 if pair.input.is_idle else pair.input.unit_count
    cost += 1 if pair.output.is_idle else pair.output.unit_count
    if pair.output_terminal:
        cost += 1
    return cost


def escape(text: str) -> str:
    return text.replace("<", "<<")


def _payload(s: Slice) -> str:
    return IDLE_MARK if s.is_idle else escape(s.text)


def encode_context(history: list[SlicePair], new_input: Slice) -> str:
    """Render history plus the current tick's input into the backend prompt."""
    if new_input.role != USER:
        raise ValueError("new_input must be a user slice")
    start = history[0].tick_index if history else 0
    parts = [f"<t:{start}>"]
    for offset, pair in enumerate(history):
        if pair.tick_index != start + offset:
            raise ValueError("history tick indices must be consecutive")
        parts.append(IN_MARK)
        parts.append(_payload(pair.input))
        parts.append(OUT_MARK)
        parts.append(_payload(pair.output))
        if pair.output_terminal:
            parts.append(EOS_MARK)
    parts.append(IN_MARK)
    parts.append(_payload(new_input))
    parts.append(OUT_MARK)
    return "".join(parts)


def _scan(encoded: str) -> list[tuple[str, str]]:
    """Tokenize into ("lit", char) and ("mark", name) items."""
    items: list[tuple[str, str]] = []
    i = 0
    n = len(encoded)
    while i < n:
        ch = encoded[i]
        if ch == "<":
            if encoded.startswith("<<", i):
                items.append(("lit", "<"))
                i += 2
                continue
            end = encoded.find(">", i)
            if end == -1:
                raise EncodingError(f"unterminated marker at offset {i}")
            name = encoded[i : end + 1]
            if name not in _KNOWN_MARKS and not _TICK_HEADER.fullmatch(name):
                raise EncodingError(f"unknown marker {name!r} at offset {i}")
            items.append(("mark", name))
            i = end + 1
        else:
            items.append(("lit", ch))
            i += 1
    return items


_EMPTY = object()
_IDLE = object()


def _read_payload(
    items: list[tuple[str, str]], i: int, stop_marks: set[str]
) -> tuple[object, int]:
    """Collect one payload: literal text, the idle marker, or nothing."""
    chars: list[str] = []
    saw_idle = False
    while i < len(items):
        kind, value = items[i]
        if kind == "mark":
            if value in stop_marks:
                break
            if value == IDLE_MARK:
                saw_idle = True
                i += 1
                continue
            raise EncodingError(f"marker {value!r} not valid inside a payload")
        chars.append(value)
        i += 1
    if saw_idle:
        if chars:
            raise EncodingError("idle marker mixed with literal text")
        return _IDLE, i
    if not chars:
        return _EMPTY, i
    return "".join(chars), i


def decode_context(
    encoded: str, tokenizer: Tokenizer | None = None
) -> tuple[list[SlicePair], Slice]:
    """Invert encode_context, recomputing unit counts from the text.

    User unit counts are word counts; assistant unit counts come from the
    tokenizer (defaulting to whitespace words).
    """
    tokenizer = tokenizer or WordTokenizer()
    items = _scan(encoded)
    if not items or items[0][0] != "mark":
        raise EncodingError("missing tick header")
    header = _TICK_HEADER.fullmatch(items[0][1])
    if header is None:
        raise EncodingError("missing tick header")
    start = int(header.group(1))

    frames: list[tuple[object, object, bool]] = []
    i = 1
    while i < len(items):
        if items[i] != ("mark", IN_MARK):
            raise EncodingError("expected <in> marker")
        i += 1
        in_payload, i = _read_payload(items, i, {OUT_MARK})
        if i >= len(items) or items[i] != ("mark", OUT_MARK):
            raise EncodingError("expected <out> marker")
        i += 1
        out_payload, i = _read_payload(items, i, {IN_MARK, EOS_MARK})
        terminal = False
        if i < len(items) and items[i] == ("mark", EOS_MARK):
            terminal = True
            i += 1
        frames.append((in_payload, out_payload, terminal))

    if not frames:
        raise EncodingError("no input group present")
    last_in, last_out, last_terminal = frames[-1]
    if last_out is not _EMPTY or last_terminal:
        raise EncodingError("final group must leave the output open")

    def to_user(payload: object) -> Slice:
        if payload is _IDLE:
            return idle_slice(USER)
        if payload is _EMPTY:
            raise EncodingError("empty input payload")
        assert isinstance(payload, str)
        return text_slice(USER, payload, len(payload.split()))

    def to_assistant(payload: object) -> Slice:
        if payload is _IDLE:
            return idle_slice(ASSISTANT)
        if payload is _EMPTY:
            raise EncodingError("empty output payload")
        assert isinstance(payload, str)
        return text_slice(ASSISTANT, payload, len(tokenizer.encode(payload)))

    history: list[SlicePair] = []
    for offset, (in_payload, out_payload, terminal) in enumerate(frames[:-1]):
        history.append(
            SlicePair(
                tick_index=start + offset,
                input=to_user(in_payload),
                output=to_assistant(out_payload),
                output_terminal=terminal,
            )
        )
    return history, to_user(last_in)
