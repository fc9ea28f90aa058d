"""Structural validation of emitted examples, self-contained per line.

Checks use only the example itself plus its injection_meta: tick indices,
slice-width bounds, the one-non-idle-side rule, and the category's shape
(idle outputs across an insertion, order projection for interweaving,
suffix continuation for back-on-topic, truncation bookkeeping for resets).
"""

from __future__ import annotations

from typing import Sequence

from ..protocol import SlicePair
from ..slicing import WordTokenizer, normalize_ws
from .models import CATEGORIES, DuplexDialogue


def _slice_problems(dialogue: DuplexDialogue) -> list[str]:
    problems = []
    meta = dialogue.injection_meta
    slicer = meta.get("slicer", {})
    max_user = slicer.get("user_width_max", 6)
    max_tokens = slicer.get("assistant_chunk_tokens", 10)
    tok = WordTokenizer()
    for i, pair in enumerate(dialogue.pairs):
        if pair.tick_index != i:
            problems.append(f"pair {i}: tick_index {pair.tick_index} not consecutive")
        if pair.input.is_idle and pair.output.is_idle:
            problems.append(f"pair {i}: both sides idle")
        if not pair.input.is_idle and not pair.output.is_idle:
            problems.append(f"pair {i}: both sides speaking")
        if not pair.input.is_idle:
            words = len(pair.input.text.split())
            if not 1 <= words <= max_user:
                problems.append(f"pair {i}: input slice has {words} words")
        if not pair.output.is_idle:
            units = len(tok.encode(pair.output.text))
            if not 1 <= units <= max_tokens:
                problems.append(f"pair {i}: output slice has {units} tokens")
        if pair.output_terminal and pair.output.is_idle:
            problems.append(f"pair {i}: terminal marker on an idle output")
    return problems


def _idle_span(pairs: Sequence[SlicePair], start: int, length: int, label: str) -> list[str]:
    problems = []
    for i in range(start, start + length):
        if i >= len(pairs):
            problems.append(f"{label}: span [{start}, {start + length}) out of range")
            break
        if pairs[i].input.is_idle:
            problems.append(f"{label}: pair {i} should carry inserted input")
        if not pairs[i].output.is_idle:
            problems.append(f"{label}: pair {i} output must be idle during insertion")
    return problems


def _check_termination(dialogue: DuplexDialogue) -> list[str]:
    meta = dialogue.injection_meta
    problems = []
    for key in ("insert_start", "insert_len", "cut", "transition_index", "inserted_text"):
        if key not in meta:
            return [f"missing meta key {key!r}"]
    start, length = meta["insert_start"], meta["insert_len"]
    problems += _idle_span(dialogue.pairs, start, length, "termination insertion")
    # the slices right before the insertion are the truncated, non-terminal response
    cut = meta["cut"]
    if start - cut < 0:
        problems.append("cut extends before the dialogue start")
    else:
        for i in range(start - cut, start):
            pair = dialogue.pairs[i]
            if pair.output.is_idle:
                problems.append(f"pair {i}: truncated response slice missing")
            if pair.output_terminal:
                problems.append(f"pair {i}: truncated response must not be terminal")
    if not 1 <= cut < meta.get("response_slices", cut + 1):
        problems.append(f"cut {cut} not strictly inside the response")
    inserted = normalize_ws(
        " ".join(
            dialogue.pairs[i].input.text
            for i in range(start, min(start + length, len(dialogue.pairs)))
        )
    )
    if inserted != normalize_ws(meta["inserted_text"]):
        problems.append("inserted input does not reassemble to inserted_text")
    return problems


def _check_interweaving(dialogue: DuplexDialogue) -> list[str]:
    meta = dialogue.injection_meta
    spans = meta.get("turn_spans")
    order = meta.get("turn_order")
    if not spans or order is None:
        return ["missing turn_spans/turn_order meta"]
    problems = []
    if [s[0] for s in spans] != list(order):
        problems.append("turn_spans disagree with turn_order")
    prev_end = -1
    for src, start, end in spans:
        if start != prev_end + 1:
            problems.append(f"span for source {src} starts at {start}, expected {prev_end + 1}")
        if end < start:
            problems.append(f"empty span for source {src}")
        prev_end = end
    if prev_end != len(dialogue.pairs) - 1:
        problems.append("spans do not cover the dialogue")
    return problems


def _check_regeneration(dialogue: DuplexDialogue) -> list[str]:
    meta = dialogue.injection_meta
    for key in ("repeat_start", "repeat_len", "transition_index", "inserted_text", "response_text"):
        if key not in meta:
            return [f"missing meta key {key!r}"]
    problems = _idle_span(
        dialogue.pairs, meta["repeat_start"], meta["repeat_len"], "repetition"
    )
    start = meta["repeat_start"]
    if start == 0:
        problems.append("repetition cannot open the dialogue")
    else:
        before = dialogue.pairs[start - 1]
        if not before.output_terminal:
            problems.append("repetition must follow a completed response")
    return problems


def _check_reset(dialogue: DuplexDialogue) -> list[str]:
    meta = dialogue.injection_meta
    cuts = meta.get("cuts")
    boundaries = meta.get("boundaries")
    if cuts is None or boundaries is None or len(boundaries) != 5:
        return ["missing cuts/boundaries meta"]
    problems = []
    if len(cuts) != 4:
        problems.append(f"expected 4 truncations, got {len(cuts)}")
    if len(meta.get("transition_indices", [])) != 4:
        problems.append("expected 4 reset transitions")
    for d_idx in range(4):
        boundary = boundaries[d_idx + 1]
        if not 0 < boundary <= len(dialogue.pairs) - 1:
            problems.append(f"boundary {boundary} out of range")
            continue
        before = dialogue.pairs[boundary - 1]
        # the prior dialogue was abandoned mid-response
        if before.output.is_idle or before.output_terminal:
            problems.append(
                f"pair {boundary - 1}: expected a non-terminal response slice before a reset"
            )
        after = dialogue.pairs[boundary]
        if after.input.is_idle:
            problems.append(f"pair {boundary}: a reset must open with user input")
    last = dialogue.pairs[-1]
    if last.output.is_idle or not last.output_terminal:
        problems.append("final dialogue must end with a completed response")
    return problems


def _check_back_on_topic(dialogue: DuplexDialogue) -> list[str]:
    meta = dialogue.injection_meta
    for key in ("question_start", "question_len", "remainder_text", "resume_start"):
        if key not in meta:
            return [f"missing meta key {key!r}"]
    problems = _idle_span(
        dialogue.pairs, meta["question_start"], meta["question_len"], "question"
    )
    resume_start = meta["resume_start"]
    texts = []
    for pair in dialogue.pairs[resume_start:]:
        if pair.output.is_idle:
            break
        texts.append(pair.output.text)
        if pair.output_terminal:
            break
    resumed = normalize_ws(" ".join(texts))
    remainder = normalize_ws(meta["remainder_text"])
    if not resumed.endswith(remainder):
        problems.append("resumed response does not end with the interrupted remainder")
    return problems


_CATEGORY_CHECKS = {
    "generation_termination": _check_termination,
    "topic_interweaving": _check_interweaving,
    "regeneration": _check_regeneration,
    "dialogue_reset": _check_reset,
    "back_on_topic": _check_back_on_topic,
}


def validate_dialogue(dialogue: DuplexDialogue) -> list[str]:
    """Return all structural problems found; an empty list means valid."""
    if dialogue.category not in CATEGORIES:
        return [f"unknown category {dialogue.category!r}"]
    problems = _slice_problems(dialogue)
    check = _CATEGORY_CHECKS.get(dialogue.category)
    if check is not None:
        problems += check(dialogue)
    return problems
