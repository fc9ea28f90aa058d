"""Source and output record types for the dataset pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..protocol import SlicePair
from ..slicing import ASSISTANT, USER

CATEGORIES = (
    "basic",
    "topic_interweaving",
    "generation_termination",
    "regeneration",
    "dialogue_reset",
    "back_on_topic",
)


class ForgeError(Exception):
    """Base class for dataset construction failures."""


class TooShort(ForgeError):
    """The source dialogue cannot support the requested construction."""


class CountOutOfRange(ForgeError):
    """A batch has the wrong number of source dialogues for its category."""


@dataclass(frozen=True)
class SourceDialogue:
    """A plain alternating chat dialogue, user speaking first."""

    id: str
    messages: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("source dialogue needs an id")
        if len(self.messages) < 2:
            raise TooShort(f"{self.id}: need at least one full turn")
        for i, (role, text) in enumerate(self.messages):
            expected = USER if i % 2 == 0 else ASSISTANT
            if role != expected:
                raise ValueError(
                    f"{self.id}: message {i} has role {role!r}, expected {expected!r}"
                )
            if not text.split():
                raise ValueError(f"{self.id}: message {i} is empty")

    @property
    def turns(self) -> list[tuple[str, str]]:
        """Complete (user, assistant) pairs; a trailing user message is dropped."""
        pairs = []
        for i in range(0, len(self.messages) - 1, 2):
            pairs.append((self.messages[i][1], self.messages[i + 1][1]))
        return pairs


@dataclass(frozen=True)
class DuplexDialogue:
    """One training example: a tick-aligned slice-pair sequence plus replay metadata."""

    id: str
    category: str
    pairs: tuple[SlicePair, ...]
    injection_meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if not self.pairs:
            raise ValueError("a duplex dialogue needs at least one pair")
        for i, pair in enumerate(self.pairs):
            if pair.tick_index != i:
                raise ValueError(
                    f"pair {i} has tick_index {pair.tick_index}; must be consecutive from 0"
                )
            if pair.input.is_idle and pair.output.is_idle:
                raise ValueError(f"pair {i} is fully idle")
