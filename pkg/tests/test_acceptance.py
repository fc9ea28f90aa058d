"""Acceptance gate: one test per shipping criterion, each printing a PASS/FAIL line.

Run with -s to see the lines as they happen; under default capture they
still appear in the report for any failing criterion.
"""

import json
import random
import time

from duplexchat.backends import GeneratorBackend, ScriptedBackend, ScriptedRule
from duplexchat.clock import VirtualClock
from duplexchat.forge.cli import main as forge_main
from duplexchat.forge.corpus import (
    CorpusStats,
    dialogue_to_json,
    dumps_line,
    iter_corpus,
)
from duplexchat.forge.models import CATEGORIES
from duplexchat.forge.transitions import TransitionBank
from duplexchat.forge.validate import validate_dialogue
from duplexchat.harness.concat import concat_eval, read_instructions
from duplexchat.protocol import SlicePair, decode_context, encode_context
from duplexchat.service.manager import SessionManager
from duplexchat.service.schemas import ConfigOverrides
from duplexchat.service.transcripts import TranscriptStore
from duplexchat.session import DuplexSession, GenConfig
from duplexchat.slicing import (
    ASSISTANT,
    USER,
    SlicerConfig,
    idle_slice,
    normalize_ws,
    reassemble,
    split_assistant_message,
    split_user_message,
    text_slice,
)

from conftest import make_source

POOL = (
    "alpha brook cedar delta ember fjord grain hollow ivory juniper "
    "kernel lumen marrow nectar onyx prairie quartz ripple slate timber"
).split()


def report(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f": {detail}"
    print(line, flush=True)


class Recorder(GeneratorBackend):
    """Captures every context string the wrapped backend is shown."""

    def __init__(self, inner):
        self.inner = inner
        self.contexts = []

    def generate(self, ctx, config, cancel=None):
        self.contexts.append(ctx)
        return self.inner.generate(ctx, config, cancel)


def restate(query: str) -> str:
    # frozen copy of the scripted backend's default response shape
    return (
        f"You asked about the following: {query} "
        "Here is a considered answer that walks through the point step by step "
        "and then wraps up cleanly."
    )


def test_slicing_round_trip_10k():
    rng = random.Random(2024)
    cfg = SlicerConfig(rng_seed=0)
    width_violations = 0
    chunk_violations = 0
    mismatches = 0
    started = time.perf_counter()
    for _ in range(10_000):
        n = rng.randint(0, 200)
        text = " ".join(rng.choice(POOL) for _ in range(n))

        user_slices = split_user_message(text, cfg, rng)
        for s in user_slices[:-1]:
            if not 4 <= s.unit_count <= 6:
                width_violations += 1
        if reassemble(user_slices) != normalize_ws(text):
            mismatches += 1

        assistant_slices = split_assistant_message(text, config=cfg)
        for s in assistant_slices:
            if s.unit_count > 10:
                chunk_violations += 1
        if reassemble(assistant_slices) != normalize_ws(text):
            mismatches += 1
    elapsed = time.perf_counter() - started
    ok = width_violations == chunk_violations == mismatches == 0 and elapsed < 10
    report(
        "slicing round-trip (10,000 messages)",
        ok,
        f"{mismatches} mismatches, {width_violations + chunk_violations} "
        f"bound violations, {elapsed:.2f}s",
    )
    assert ok


def run_cancellation_case(case: int) -> None:
    rng = random.Random(f"cancel:{case}")
    limit = rng.randint(3, 10)
    config = GenConfig(
        max_tokens_per_chunk=limit, slicer=SlicerConfig(rng_seed=case)
    )
    session = DuplexSession(config=config, session_id=f"cancel-{case}")
    interjection = " ".join(f"x{case}w{j}" for j in range(rng.randint(4, 14))) + "?"
    first_word = interjection.split()[0]

    armed = {}

    def unit_hook(unit_index: int) -> None:
        if armed and len(recorder.contexts) - 1 == armed.get("call") and unit_index == armed.get("unit"):
            armed.clear()
            session.submit_input(interjection)

    recorder = Recorder(ScriptedBackend(unit_hook=unit_hook))

    query = " ".join(f"q{case}w{j}" for j in range(rng.randint(5, 18))) + "?"
    session.submit_input(query)
    tick = 0
    while True:
        session.tick(recorder)
        tick += 1
        assert tick < 20, "scripted response never started"
        if session.history and not session.history[-1].output.is_idle:
            break

    mid_flight = rng.random() < 0.5
    if mid_flight:
        armed.update(call=tick, unit=rng.randint(0, limit - 1))
        before = len(session.history)
        session.tick(recorder)
        assert not armed, "interruption hook never fired"
        # the cancelled call's result must not have been recorded
        assert len(session.history) == before
        next_call = tick + 1
    else:
        session.submit_input(interjection)
        next_call = tick
    tick += 1

    while tick < 45:
        session.tick(recorder)
        tick += 1
        if session.history[-1].output_terminal and not session.pending_input:
            break
    assert session.history[-1].output_terminal, "second response never finished"

    assert first_word in recorder.contexts[next_call], (
        "new input missing from the next tick's context"
    )
    interrupt_at = next_call - 1 if mid_flight else next_call
    outputs_after = [
        p.output
        for p in session.history
        if p.tick_index >= interrupt_at and not p.output.is_idle
    ]
    assert reassemble(outputs_after) == restate(interjection)


def test_protocol_cancellation_1k():
    failures = 0
    for case in range(1000):
        try:
            run_cancellation_case(case)
        except AssertionError:
            failures += 1
            if failures == 1:
                report("protocol cancellation (1,000 interleavings)", False, f"case {case}")
                raise
    report("protocol cancellation (1,000 interleavings)", failures == 0, "0 violations")
    assert failures == 0


def test_idle_compliance_200():
    total = 0
    idle = 0
    answered = 0
    for case in range(200):
        rng = random.Random(f"idle:{case}")
        config = GenConfig(slicer=SlicerConfig(rng_seed=case))
        session = DuplexSession(config=config)
        backend = ScriptedBackend()
        # a query that never reaches sentence-final punctuation
        session.submit_input(" ".join(f"inc{case}w{j}" for j in range(rng.randint(4, 30))))
        for _ in range(rng.randint(3, 12)):
            output = session.tick(backend)
            total += 1
            if output.is_idle:
                idle += 1
        # completing the query flips the backend out of silence
        session.submit_input("so what do you think?")
        for _ in range(10):
            if not session.tick(backend).is_idle:
                answered += 1
                break
    ok = idle == total and answered == 200
    report(
        "idle compliance (200 incomplete-query scenarios)",
        ok,
        f"{idle}/{total} idle outputs, {answered}/200 answered after completion",
    )
    assert ok


def test_termination_compliance_200():
    violations = 0
    checked = 0
    for case in range(200):
        rng = random.Random(f"term:{case}")
        limit = rng.randint(4, 10)
        config = GenConfig(
            max_tokens_per_chunk=limit, slicer=SlicerConfig(rng_seed=case)
        )
        session = DuplexSession(config=config)
        backend = ScriptedBackend()
        session.submit_input(
            " ".join(f"t{case}q{j}" for j in range(rng.randint(5, 16))) + "?"
        )
        tick = 0
        while True:
            session.tick(backend)
            tick += 1
            assert tick < 24
            if session.history and not session.history[-1].output.is_idle:
                break
        # barge in mid-response with an unfinished interjection
        session.submit_input(" ".join(f"t{case}i{j}" for j in range(rng.randint(4, 12))))
        interrupt_tick = session.next_tick_index
        quiet_ticks = rng.randint(1, 6)
        drained = False
        for _ in range(30):
            session.tick(backend)
            if not session.pending_input:
                if quiet_ticks == 0:
                    break
                quiet_ticks -= 1
                drained = True
        assert drained
        session.submit_input("right, please go on?")
        completion_tick = None
        for _ in range(30):
            output = session.tick(backend)
            if not session.pending_input and completion_tick is None:
                completion_tick = session.history[-1].tick_index
            if not output.is_idle:
                break
        for pair in session.history:
            if interrupt_tick <= pair.tick_index < completion_tick:
                checked += 1
                if not pair.output.is_idle:
                    violations += 1
    ok = violations == 0 and checked >= 200
    report(
        "termination compliance (200 barge-in scenarios)",
        ok,
        f"{violations} non-idle outputs across {checked} interrupted ticks",
    )
    assert ok


# frozen copies of the three transition banks, kept independent of the
# package so a drifting constant cannot silently self-validate
FROZEN_TERMINATION = (
    "",
    "I need to cut you off right now; this is urgent.",
    "Excuse me, I need to interject for a moment.",
    "Sorry to interrupt, but I have something important to add.",
    "Excuse me, may I interrupt for a moment?",
    "I'm sorry to break in, but there's something important I need to address.",
    "I apologize for interrupting, but I'd like to interject for a moment.",
    "I'm sorry to interrupt, but I have a quick point to make.",
    "I appreciate your input, but I need a moment of silence now.",
    "I'm sorry to interrupt, but I really need some quiet time to focus.",
    "Enough talking! I need you to be quiet now.",
)
FROZEN_REGENERATION = (
    "I may not have expressed myself clearly. What I meant was [topic]",
    "I think there might be a bit of confusion. Let me clarify [topic]",
    "I appreciate your input, but I was hoping for more details on [topic]",
    "I think there might be a misunderstanding. What I'm really looking for is [topic]",
    "I may not have explained myself clearly. Let me rephrase the question. "
    "What are your thoughts on [topic]?",
    "Actually, the correct information is [topic]. Could you share your perspective on that?",
    "I'm a bit confused because what you mentioned contradicts the information I have. "
    "Can we go over this again?",
    "I'm sorry, but that information seems to be incorrect. Let me clarify the question, "
    "and please provide the accurate details regarding [topic].",
    "I'm sorry, but that's not accurate. The correct information is [topic]. "
    "It's essential to have the correct details for our discussion.",
    "I appreciate your effort in responding, but I think there might be a misunderstanding. "
    "What I intended to convey was [topic]. Let's revisit the topic to ensure "
    "we're on the same page.",
    "I see there might be some confusion. Let me clarify my point further to ensure "
    "we're on the same page. What I meant was [topic]. Can we discuss this to make sure "
    "we have a mutual understanding?",
    "There seems to be a misunderstanding. I meant [topic]. Let's align our understanding.",
    "No.",
    "Oh, No.",
    "No, you are wrong.",
)
FROZEN_RESET = (
    "",
    "That's interesting, and speaking of [topic], have you ever...?",
    "I was just thinking about [topic], what are your thoughts on that?",
    "That's fascinating! On a different note, have you ever thought about [topic]?",
    "I was just reading about [topic]. What are your thoughts on that?",
    "By the way, speaking of something else.",
    "That reminds me, have you heard about [topic]?",
    "Can we shift gears for a moment and talk about [topic]?",
    "I've been curious about [topic]. Have you ever considered it?",
    "I was thinking about [topic]. What are your thoughts on that?",
    "Now, shifting gears to a different subject, have you ever explored [topic]",
    "Moving on to a different topic, have you ever considered [topic]",
    "Changing the subject, have you ever thought about [topic]",
    "Switching gears, let's talk about [topic]",
    "On a different note, have you ever thought about [topic]",
    "Speaking of which, have you ever considered exploring [topic]",
    "Changing the subject, let's now delve into [topic]",
    "Shifting gears a bit, let's talk about [topic]",
)


def build_lines(sources, seed):
    stats = CorpusStats()
    lines = [
        dumps_line(dialogue_to_json(d))
        for d in iter_corpus(sources, seed=seed, stats=stats)
    ]
    return lines, stats


def test_forge_structural_validation(sources50, tmp_path):
    lines, _ = build_lines(sources50, seed=0)
    dialogues_path = tmp_path / "corpus.jsonl"
    dialogues_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    from duplexchat.forge.corpus import read_corpus, dialogue_from_json

    dialogues = [dialogue_from_json(obj) for obj in read_corpus(dialogues_path)]
    categories = {d.category for d in dialogues}
    invalid = sum(1 for d in dialogues if validate_dialogue(d))
    cli_ok = forge_main(["validate", str(dialogues_path)]) == 0

    bank = TransitionBank.default()
    banks_ok = (
        bank.termination == FROZEN_TERMINATION
        and bank.regeneration == FROZEN_REGENERATION
        and bank.reset == FROZEN_RESET
    )
    rebuilt, _ = build_lines([make_source(i) for i in range(50)], seed=0)
    identical = rebuilt == lines

    ok = (
        categories == set(CATEGORIES)
        and invalid == 0
        and cli_ok
        and banks_ok
        and identical
    )
    report(
        "forge structural validation (50-dialogue seed)",
        ok,
        f"{len(dialogues)} dialogues, {len(categories)}/6 categories, "
        f"{invalid} invalid, banks {'verbatim' if banks_ok else 'DRIFTED'}, "
        f"rebuild {'byte-identical' if identical else 'DIVERGED'}",
    )
    assert ok


def test_stats_oracle_10k(tmp_path, capsys):
    sources = [
        make_source(i, turns=2, user_words=8, assistant_words=30)
        for i in range(16_000)
    ]
    path = tmp_path / "big.jsonl"
    written = 0
    with open(path, "w", encoding="utf-8") as fh:
        for dialogue in iter_corpus(sources, seed=5):
            fh.write(dumps_line(dialogue_to_json(dialogue)) + "\n")
            written += 1
            if written == 10_000:
                break

    code = forge_main(["stats", str(path), "--json"])
    reported = json.loads(capsys.readouterr().out)
    assert code == 0

    # brute-force recount straight off the raw JSON lines
    counts = {}
    pair_totals = {}
    token_totals = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            cat = obj["category"]
            counts[cat] = counts.get(cat, 0) + 1
            pair_totals[cat] = pair_totals.get(cat, 0) + len(obj["pairs"])
            tokens = 0
            for pair in obj["pairs"]:
                tokens += 1 if pair["in"] is None else len(pair["in"].split())
                tokens += 1 if pair["out"] is None else len(pair["out"].split())
                tokens += 1 if pair["terminal"] else 0
            token_totals[cat] = token_totals.get(cat, 0) + tokens

    mismatches = []
    for cat in counts:
        got = reported["categories"][cat]
        if got["count"] != counts[cat]:
            mismatches.append(f"{cat} count")
        if got["pairs"] != pair_totals[cat]:
            mismatches.append(f"{cat} pairs")
        if got["tokens"] != token_totals[cat]:
            mismatches.append(f"{cat} tokens")
        if got["avg_pairs"] != round(pair_totals[cat] / counts[cat], 1):
            mismatches.append(f"{cat} avg_pairs")
        if got["avg_tokens"] != round(token_totals[cat] / counts[cat], 1):
            mismatches.append(f"{cat} avg_tokens")
    if reported["total"]["count"] != sum(counts.values()):
        mismatches.append("total")
    ok = not mismatches and written == 10_000
    report(
        "stats oracle (10,000-dialogue recount)",
        ok,
        f"{written} dialogues, mismatches: {mismatches or 'none'}",
    )
    assert ok


def random_fuzz_pair(rng: random.Random, index: int) -> SlicePair:
    def words(n):
        out = []
        for _ in range(n):
            w = rng.choice(POOL)
            roll = rng.random()
            if roll < 0.08:
                w = "<" + w
            elif roll < 0.12:
                w = w + "<<tag"
            elif roll < 0.15:
                w = "<idle>"
            out.append(w)
        return " ".join(out)

    if rng.random() < 0.3:
        inp = idle_slice(USER)
    else:
        text = words(rng.randint(1, 8))
        inp = text_slice(USER, text, len(text.split()))
    if inp.is_idle or rng.random() < 0.5:
        text = words(rng.randint(1, 10))
        out = text_slice(ASSISTANT, text, len(text.split()))
        terminal = rng.random() < 0.3
    else:
        out = idle_slice(ASSISTANT)
        terminal = False
    return SlicePair(index, inp, out, output_terminal=terminal)


def test_context_encoding_bijectivity_10k():
    rng = random.Random(777)
    failures = 0
    for _ in range(10_000):
        start = rng.randint(0, 9)
        history = [
            random_fuzz_pair(rng, start + i) for i in range(rng.randint(0, 14))
        ]
        if rng.random() < 0.4:
            new_input = idle_slice(USER)
        else:
            text = " ".join(rng.choice(POOL) for _ in range(rng.randint(1, 6)))
            new_input = text_slice(USER, text, len(text.split()))
        encoded = encode_context(history, new_input)
        decoded, decoded_input = decode_context(encoded)
        if decoded != history or decoded_input != new_input:
            failures += 1
        elif encode_context(decoded, decoded_input) != encoded:
            failures += 1
    report("context encoding bijectivity (10,000 histories)", failures == 0, f"{failures} failures")
    assert failures == 0


def test_wire_soak_50_sessions(tmp_path):
    clock = VirtualClock()
    store = TranscriptStore(tmp_path / "soak")
    manager = SessionManager(
        backend_factory=lambda: ScriptedBackend(ScriptedRule.echo()),
        base_config=GenConfig(max_context=400),
        clock=clock,
        store=store,
    )
    sessions = [
        manager.open_session(ConfigOverrides(rng_seed=1000 + i)) for i in range(50)
    ]
    for t in range(1000):
        for i, managed in enumerate(sessions):
            if (t + 7 * i) % 83 == 0:
                manager.submit(
                    managed.session_id, f"s{i} t{t} question for the record ok?"
                )
            manager.tick_once(managed)
        clock.advance(2.0)

    dropped = 0
    errored = 0
    histories = {}
    for managed in sessions:
        ticks = [f.tick_index for f in managed.frames if f.type != "error"]
        errored += sum(1 for f in managed.frames if f.type == "error")
        if ticks != list(range(1000)):
            dropped += 1
        histories[managed.session_id] = list(managed.session.history)
    manager.close_all()

    replay_diverged = 0
    for session_id, history in histories.items():
        if list(store.replay(session_id).history) != history:
            replay_diverged += 1
    ok = dropped == 0 and errored == 0 and replay_diverged == 0
    report(
        "wire soak (50 sessions x 1,000 virtual ticks)",
        ok,
        f"{dropped} sessions with dropped/duplicated ticks, "
        f"{errored} error frames, {replay_diverged} replay divergences",
    )
    assert ok


def test_concat_eval_100(tmp_path):
    rng = random.Random(909)
    path = tmp_path / "instructions.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(100):
            text = (
                f"inst{i} "
                + " ".join(rng.choice(POOL) for _ in range(rng.randint(4, 40)))
                + "."
            )
            fh.write(json.dumps({"id": f"i{i:03d}", "instruction": text}) + "\n")

    instructions = read_instructions(path)
    rows = concat_eval(
        instructions, lambda: ScriptedBackend(ScriptedRule.echo())
    )
    wrong = sum(
        1
        for row, src in zip(rows, instructions)
        if row.get("output") != normalize_ws(src["instruction"])
    )
    ok = wrong == 0 and len(rows) == 100
    report(
        "concat_eval (100 instructions vs scripted ground truth)",
        ok,
        f"{wrong} mismatches",
    )
    assert ok
