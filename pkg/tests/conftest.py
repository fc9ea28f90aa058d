"""Shared builders for tests: deterministic source dialogues and word soup."""

import random

import pytest

from duplexchat.forge.models import SourceDialogue

WORDS = (
    "time river stone cloud light copper signal garden window "
    "thread market harbor engine forest meadow circuit lantern "
    "paper bridge valley summer anchor bottle canvas dormant"
).split()


def word_soup(rng: random.Random, n: int) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(n))


def make_source(
    idx: int,
    turns: int = 3,
    user_words: int = 9,
    assistant_words: int = 28,
    seed: int | None = None,
) -> SourceDialogue:
    """An alternating dialogue with enough text for every construction."""
    rng = random.Random(idx if seed is None else seed)
    messages = []
    for t in range(turns):
        messages.append(("user", f"question {idx}-{t} " + word_soup(rng, user_words) + "?"))
        messages.append(
            ("assistant", f"answer {idx}-{t} " + word_soup(rng, assistant_words) + ".")
        )
    return SourceDialogue(id=f"src-{idx:04d}", messages=tuple(messages))


@pytest.fixture
def sources():
    return [make_source(i) for i in range(40)]


@pytest.fixture
def sources50():
    return [make_source(i) for i in range(50)]
