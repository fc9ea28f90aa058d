"""Constructors for the six duplex dialogue categories.

Each generator is a pure function of its sources and an integer-or-string
seed: it derives a private random.Random, so rerunning with the same
arguments reproduces the example exactly. Inputs occupy their own ticks
(outputs idle), responses occupy theirs (inputs idle, final slice
terminal), and the first response slice lands on the tick immediately
after the final input slice. Truncations always fall on slice boundaries.
"""

from __future__ import annotations

import random
from typing import Sequence

from ..protocol import SlicePair
from ..slicing import (
    ASSISTANT,
    Slice,
    SlicerConfig,
    Tokenizer,
    USER,
    WordTokenizer,
    idle_slice,
    split_assistant_message,
    split_user_message,
)
from .models import CountOutOfRange, DuplexDialogue, SourceDialogue, TooShort
from .rewriter import IdentityRewriter, Rewriter
from .transitions import TransitionBank

# Reference corpus composition; used as default sampling weights.
DEFAULT_MIX: dict[str, int] = {
    "basic": 1_458_353,
    "topic_interweaving": 489_065,
    "generation_termination": 1_468_141,
    "regeneration": 806_687,
    "dialogue_reset": 300_318,
    "back_on_topic": 327_286,
}

Seed = int | str


class _PairBuilder:
    """Accumulates tick-aligned pairs with consecutive indices from zero."""

    def __init__(self) -> None:
        self.pairs: list[SlicePair] = []

    @property
    def next_index(self) -> int:
        return len(self.pairs)

    def add(self, inp: Slice, out: Slice, terminal: bool = False) -> None:
        self.pairs.append(
            SlicePair(
                tick_index=len(self.pairs),
                input=inp,
                output=out,
                output_terminal=terminal,
            )
        )

    def user_says(self, slices: Sequence[Slice]) -> None:
        for s in slices:
            self.add(s, idle_slice(ASSISTANT))

    def assistant_says(self, slices: Sequence[Slice], terminal: bool = True) -> None:
        last = len(slices) - 1
        for i, s in enumerate(slices):
            self.add(idle_slice(USER), s, terminal=terminal and i == last)

    def done(self, dialogue_id: str, category: str, meta: dict) -> DuplexDialogue:
        return DuplexDialogue(
            id=dialogue_id,
            category=category,
            pairs=tuple(self.pairs),
            injection_meta=meta,
        )


def _base_meta(seed: Seed, sources: Sequence[SourceDialogue], cfg: SlicerConfig) -> dict:
    return {
        "rng_seed": seed,
        "source_ids": [d.id for d in sources],
        "slicer": {
            "user_width_min": cfg.user_width_min,
            "user_width_max": cfg.user_width_max,
            "assistant_chunk_tokens": cfg.assistant_chunk_tokens,
        },
        "tokenizer": "whitespace",
    }


def _emit_turn(
    builder: _PairBuilder,
    user_text: str,
    assistant_text: str,
    cfg: SlicerConfig,
    tokenizer: Tokenizer,
    rng: random.Random,
) -> None:
    builder.user_says(split_user_message(user_text, cfg, rng))
    builder.assistant_says(split_assistant_message(assistant_text, tokenizer, cfg))


def gen_basic(
    d: SourceDialogue,
    cfg: SlicerConfig | None = None,
    tokenizer: Tokenizer | None = None,
    seed: Seed = 0,
    dialogue_id: str | None = None,
) -> DuplexDialogue:
    """Feed each turn through the tick discipline with no course changes."""
    cfg = cfg or SlicerConfig()
    tokenizer = tokenizer or WordTokenizer()
    rng = random.Random(seed)
    builder = _PairBuilder()
    for user_text, assistant_text in d.turns:
        _emit_turn(builder, user_text, assistant_text, cfg, tokenizer, rng)
    if not builder.pairs:
        raise TooShort(f"{d.id}: no complete turns")
    meta = _base_meta(seed, [d], cfg)
    return builder.done(dialogue_id or f"basic-{d.id}", "basic", meta)


def gen_topic_interweaving(
    ds: Sequence[SourceDialogue],
    cfg: SlicerConfig | None = None,
    tokenizer: Tokenizer | None = None,
    seed: Seed = 0,
    dialogue_id: str | None = None,
) -> DuplexDialogue:
    """Interlace the turns of 3-5 dialogues, preserving each one's order."""
    if not 3 <= len(ds) <= 5:
        raise CountOutOfRange(f"need 3-5 source dialogues, got {len(ds)}")
    cfg = cfg or SlicerConfig()
    tokenizer = tokenizer or WordTokenizer()
    rng = random.Random(seed)
    builder = _PairBuilder()
    queues = [list(d.turns) for d in ds]
    turn_order: list[int] = []
    turn_spans: list[list[int]] = []
    while any(queues):
        available = [i for i, q in enumerate(queues) if q]
        src = rng.choice(available)
        user_text, assistant_text = queues[src].pop(0)
        start = builder.next_index
        _emit_turn(builder, user_text, assistant_text, cfg, tokenizer, rng)
        turn_order.append(src)
        turn_spans.append([src, start, builder.next_index - 1])
    if not builder.pairs:
        raise TooShort("no turns in any source dialogue")
    meta = _base_meta(seed, ds, cfg)
    meta["turn_order"] = turn_order
    meta["turn_spans"] = turn_spans
    return builder.done(
        dialogue_id or f"interweave-{ds[0].id}", "topic_interweaving", meta
    )


def _truncatable_turns(
    d: SourceDialogue,
    cfg: SlicerConfig,
    tokenizer: Tokenizer,
    upto: int | None = None,
    min_slices: int = 2,
) -> list[int]:
    """Indices of turns whose assistant message splits into >= min_slices."""
    turns = d.turns if upto is None else d.turns[:upto]
    eligible = []
    for j, (_, assistant_text) in enumerate(turns):
        if len(split_assistant_message(assistant_text, tokenizer, cfg)) >= min_slices:
            eligible.append(j)
    return eligible


def gen_termination(
    d: SourceDialogue,
    bank: TransitionBank | None = None,
    rewriter: Rewriter | None = None,
    cfg: SlicerConfig | None = None,
    tokenizer: Tokenizer | None = None,
    seed: Seed = 0,
    dialogue_id: str | None = None,
) -> DuplexDialogue:
    """Cut a response short with an interjection the assistant must not answer over.

    A response is truncated at a slice boundary; the next user message,
    fused with a sampled transition, arrives while the output stays idle.
    The dialogue then continues with that next turn's answer.
    """
    bank = bank or TransitionBank.default()
    rewriter = rewriter or IdentityRewriter()
    cfg = cfg or SlicerConfig()
    tokenizer = tokenizer or WordTokenizer()
    rng = random.Random(seed)
    turns = d.turns
    if len(turns) < 2:
        raise TooShort(f"{d.id}: need at least two turns")
    # the truncated turn needs a following user message to insert
    eligible = _truncatable_turns(d, cfg, tokenizer, upto=len(turns) - 1)
    if not eligible:
        raise TooShort(f"{d.id}: no response long enough to truncate")
    j = eligible[rng.randrange(len(eligible))]
    answer_slices = split_assistant_message(turns[j][1], tokenizer, cfg)
    cut = rng.randint(1, len(answer_slices) - 1)
    transition_index = rng.randrange(len(bank.termination))
    fused = rewriter.fuse(bank.termination[transition_index], turns[j + 1][0])

    builder = _PairBuilder()
    for user_text, assistant_text in turns[:j]:
        _emit_turn(builder, user_text, assistant_text, cfg, tokenizer, rng)
    builder.user_says(split_user_message(turns[j][0], cfg, rng))
    # truncated response: emitted slices are never terminal
    builder.assistant_says(answer_slices[:cut], terminal=False)
    insert_start = builder.next_index
    inserted = split_user_message(fused, cfg, rng)
    builder.user_says(inserted)
    builder.assistant_says(split_assistant_message(turns[j + 1][1], tokenizer, cfg))
    for user_text, assistant_text in turns[j + 2 :]:
        _emit_turn(builder, user_text, assistant_text, cfg, tokenizer, rng)

    meta = _base_meta(seed, [d], cfg)
    meta.update(
        {
            "turn": j,
            "cut": cut,
            "response_slices": len(answer_slices),
            "transition_index": transition_index,
            "inserted_text": fused,
            "insert_start": insert_start,
            "insert_len": len(inserted),
        }
    )
    return builder.done(
        dialogue_id or f"termination-{d.id}", "generation_termination", meta
    )


def gen_regeneration(
    d: SourceDialogue,
    bank: TransitionBank | None = None,
    rewriter: Rewriter | None = None,
    cfg: SlicerConfig | None = None,
    tokenizer: Tokenizer | None = None,
    seed: Seed = 0,
    dialogue_id: str | None = None,
) -> DuplexDialogue:
    """Repeat a query after its answer, with a corrective transition, and answer anew."""
    bank = bank or TransitionBank.default()
    rewriter = rewriter or IdentityRewriter()
    cfg = cfg or SlicerConfig()
    tokenizer = tokenizer or WordTokenizer()
    rng = random.Random(seed)
    turns = d.turns
    if not turns:
        raise TooShort(f"{d.id}: need at least one complete turn")
    j = rng.randrange(len(turns))
    transition_index = rng.randrange(len(bank.regeneration))
    fused = rewriter.fuse(bank.regeneration[transition_index], turns[j][0])
    fresh = rewriter.respond(fused)

    builder = _PairBuilder()
    for user_text, assistant_text in turns[: j + 1]:
        _emit_turn(builder, user_text, assistant_text, cfg, tokenizer, rng)
    repeat_start = builder.next_index
    inserted = split_user_message(fused, cfg, rng)
    builder.user_says(inserted)
    builder.assistant_says(split_assistant_message(fresh, tokenizer, cfg))
    for user_text, assistant_text in turns[j + 1 :]:
        _emit_turn(builder, user_text, assistant_text, cfg, tokenizer, rng)

    meta = _base_meta(seed, [d], cfg)
    meta.update(
        {
            "turn": j,
            "transition_index": transition_index,
            "inserted_text": fused,
            "response_text": fresh,
            "repeat_start": repeat_start,
            "repeat_len": len(inserted),
        }
    )
    return builder.done(dialogue_id or f"regeneration-{d.id}", "regeneration", meta)


def gen_dialogue_reset(
    ds: Sequence[SourceDialogue],
    bank: TransitionBank | None = None,
    rewriter: Rewriter | None = None,
    cfg: SlicerConfig | None = None,
    tokenizer: Tokenizer | None = None,
    seed: Seed = 0,
    dialogue_id: str | None = None,
) -> DuplexDialogue:
    """Concatenate five dialogues, abandoning the first four mid-response.

    Each of dialogues 1-4 is cut during an assistant response; the next
    dialogue opens with its first user message, prefixed with a sampled
    reset transition (the empty transition leaves the message untouched).
    Dialogue 5 runs to completion.
    """
    if len(ds) != 5:
        raise CountOutOfRange(f"need exactly 5 source dialogues, got {len(ds)}")
    bank = bank or TransitionBank.default()
    rewriter = rewriter or IdentityRewriter()
    cfg = cfg or SlicerConfig()
    tokenizer = tokenizer or WordTokenizer()
    rng = random.Random(seed)

    cuts: list[list[int]] = []
    transition_indices: list[int] = []
    fused_openers: list[str] = []
    boundaries: list[int] = []
    builder = _PairBuilder()

    for d_idx, d in enumerate(ds):
        boundaries.append(builder.next_index)
        turns = d.turns
        opener = turns[0][0]
        if d_idx > 0:
            k = rng.randrange(len(bank.reset))
            transition_indices.append(k)
            opener = rewriter.fuse(bank.reset[k], opener) if bank.reset[k] else opener
            fused_openers.append(opener)
        if d_idx < 4:
            eligible = _truncatable_turns(d, cfg, tokenizer)
            if not eligible:
                raise TooShort(f"{d.id}: no response long enough to truncate")
            jj = eligible[rng.randrange(len(eligible))]
            answer_slices = split_assistant_message(turns[jj][1], tokenizer, cfg)
            cut = rng.randint(1, len(answer_slices) - 1)
            cuts.append([jj, cut])
            for t_idx, (user_text, assistant_text) in enumerate(turns[:jj]):
                text = opener if t_idx == 0 else user_text
                _emit_turn(builder, text, assistant_text, cfg, tokenizer, rng)
            user_text = opener if jj == 0 else turns[jj][0]
            builder.user_says(split_user_message(user_text, cfg, rng))
            builder.assistant_says(answer_slices[:cut], terminal=False)
        else:
            for t_idx, (user_text, assistant_text) in enumerate(turns):
                text = opener if t_idx == 0 else user_text
                _emit_turn(builder, text, assistant_text, cfg, tokenizer, rng)

    meta = _base_meta(seed, ds, cfg)
    meta.update(
        {
            "cuts": cuts,
            "transition_indices": transition_indices,
            "fused_openers": fused_openers,
            "boundaries": boundaries,
        }
    )
    return builder.done(dialogue_id or f"reset-{ds[0].id}", "dialogue_reset", meta)


def gen_back_on_topic(
    d: SourceDialogue,
    annotator: Rewriter | None = None,
    cfg: SlicerConfig | None = None,
    tokenizer: Tokenizer | None = None,
    seed: Seed = 0,
    dialogue_id: str | None = None,
) -> DuplexDialogue:
    """Interject a question mid-response; the answer comes, then the response resumes.

    The assistant output after the interjection is the annotator's answer
    followed by the interrupted response's remaining slices verbatim, so the
    reassembled response still ends with the original remainder.
    """
    annotator = annotator or IdentityRewriter()
    cfg = cfg or SlicerConfig()
    tokenizer = tokenizer or WordTokenizer()
    rng = random.Random(seed)
    turns = d.turns
    eligible = _truncatable_turns(d, cfg, tokenizer, min_slices=3)
    if not eligible:
        raise TooShort(f"{d.id}: no response with room for a mid-message interrupt")
    j = eligible[rng.randrange(len(eligible))]
    answer_slices = split_assistant_message(turns[j][1], tokenizer, cfg)
    interrupt_after = rng.randint(1, len(answer_slices) - 1)
    prefix = answer_slices[:interrupt_after]
    remainder = answer_slices[interrupt_after:]
    spoken = " ".join(s.text for s in prefix)
    question = annotator.question(spoken)
    answer = annotator.answer(question)

    builder = _PairBuilder()
    for user_text, assistant_text in turns[:j]:
        _emit_turn(builder, user_text, assistant_text, cfg, tokenizer, rng)
    builder.user_says(split_user_message(turns[j][0], cfg, rng))
    builder.assistant_says(prefix, terminal=False)
    question_start = builder.next_index
    question_slices = split_user_message(question, cfg, rng)
    builder.user_says(question_slices)
    resume_start = builder.next_index
    answer_slices_out = split_assistant_message(answer, tokenizer, cfg)
    builder.assistant_says(list(answer_slices_out) + list(remainder))
    for user_text, assistant_text in turns[j + 1 :]:
        _emit_turn(builder, user_text, assistant_text, cfg, tokenizer, rng)

    meta = _base_meta(seed, [d], cfg)
    meta.update(
        {
            "turn": j,
            "interrupt_after": interrupt_after,
            "response_slices": len(answer_slices),
            "question": question,
            "answer": answer,
            "remainder_text": " ".join(s.text for s in remainder),
            "question_start": question_start,
            "question_len": len(question_slices),
            "resume_start": resume_start,
        }
    )
    return builder.done(dialogue_id or f"backontopic-{d.id}", "back_on_topic", meta)
