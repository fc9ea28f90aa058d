"""Corpus assembly: category sampling, streaming JSONL output, exact statistics."""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

from ..protocol import SlicePair
from ..slicing import (
    ASSISTANT,
    SlicerConfig,
    Tokenizer,
    USER,
    WordTokenizer,
    idle_slice,
    text_slice,
)
from .generators import (
    DEFAULT_MIX,
    gen_back_on_topic,
    gen_basic,
    gen_dialogue_reset,
    gen_regeneration,
    gen_termination,
    gen_topic_interweaving,
)
from .models import CATEGORIES, DuplexDialogue, ForgeError, SourceDialogue
from .rewriter import IdentityRewriter, Rewriter
from .transitions import TransitionBank

logger = logging.getLogger(__name__)


def dialogue_token_count(pairs: Sequence[SlicePair]) -> int:
    """Total units in one example: text units, one per idle slice, one per terminal."""
    total = 0
    for pair in pairs:
        total += 1 if pair.input.is_idle else pair.input.unit_count
        total += 1 if pair.output.is_idle else pair.output.unit_count
        if pair.output_terminal:
            total += 1
    return total


@dataclass
class CategoryStats:
    count: int = 0
    pair_total: int = 0
    token_total: int = 0

    @property
    def avg_pairs(self) -> float:
        return round(self.pair_total / self.count, 1) if self.count else 0.0

    @property
    def avg_tokens(self) -> float:
        return round(self.token_total / self.count, 1) if self.count else 0.0


@dataclass
class CorpusStats:
    per_category: dict[str, CategoryStats] = field(default_factory=dict)
    skipped: dict[str, int] = field(default_factory=dict)

    def observe(self, dialogue: DuplexDialogue) -> None:
        stats = self.per_category.setdefault(dialogue.category, CategoryStats())
        stats.count += 1
        stats.pair_total += len(dialogue.pairs)
        stats.token_total += dialogue_token_count(dialogue.pairs)

    def skip(self, category: str) -> None:
        self.skipped[category] = self.skipped.get(category, 0) + 1

    @property
    def total_count(self) -> int:
        return sum(s.count for s in self.per_category.values())

    @property
    def total_pairs(self) -> int:
        return sum(s.pair_total for s in self.per_category.values())

    @property
    def total_tokens(self) -> int:
        return sum(s.token_total for s in self.per_category.values())

    def to_dict(self) -> dict:
        return {
            "categories": {
                name: {
                    "count": s.count,
                    "pairs": s.pair_total,
                    "tokens": s.token_total,
                    "avg_pairs": s.avg_pairs,
                    "avg_tokens": s.avg_tokens,
                }
                for name, s in sorted(self.per_category.items())
            },
            "skipped": dict(sorted(self.skipped.items())),
            "total": {
                "count": self.total_count,
                "pairs": self.total_pairs,
                "tokens": self.total_tokens,
            },
        }

    def table(self) -> str:
        rows = [("category", "count", "avg pairs", "avg tokens")]
        for name in CATEGORIES:
            if name in self.per_category:
                s = self.per_category[name]
                rows.append((name, str(s.count), f"{s.avg_pairs}", f"{s.avg_tokens}"))
        total = self.total_count
        rows.append(
            (
                "total",
                str(total),
                f"{round(self.total_pairs / total, 1) if total else 0.0}",
                f"{round(self.total_tokens / total, 1) if total else 0.0}",
            )
        )
        widths = [max(len(r[c]) for r in rows) for c in range(4)]
        lines = []
        for i, row in enumerate(rows):
            lines.append(
                "  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip()
            )
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        if self.skipped:
            skipped = ", ".join(f"{k}={v}" for k, v in sorted(self.skipped.items()))
            lines.append(f"skipped: {skipped}")
        return "\n".join(lines)


class StatsAccumulator:
    """Streaming wrapper so stats can be collected while writing."""

    def __init__(self) -> None:
        self.stats = CorpusStats()

    def feed(self, dialogues: Iterable[DuplexDialogue]) -> Iterator[DuplexDialogue]:
        for d in dialogues:
            self.stats.observe(d)
            yield d


def _sources_needed(category: str, rng: random.Random) -> int:
    if category == "topic_interweaving":
        return rng.randint(3, 5)
    if category == "dialogue_reset":
        return 5
    return 1


def iter_corpus(
    sources: Sequence[SourceDialogue],
    mix: dict[str, float] | None = None,
    cfg: SlicerConfig | None = None,
    bank: TransitionBank | None = None,
    rewriter: Rewriter | None = None,
    seed: int = 0,
    tokenizer: Tokenizer | None = None,
    stats: CorpusStats | None = None,
    limit: int | None = None,
) -> Iterator[DuplexDialogue]:
    """Consume sources in order, sampling a category per example.

    Per-example seeds are derived as "{seed}:{index}:{category}", so any
    single example can be regenerated without replaying the whole stream.
    Generator failures are counted in stats and skipped; their sources are
    consumed. Iteration stops when the remaining sources cannot satisfy the
    next draw, or after `limit` attempts.
    """
    mix = dict(mix) if mix else dict(DEFAULT_MIX)
    unknown = set(mix) - set(CATEGORIES)
    if unknown:
        raise ValueError(f"unknown categories in mix: {sorted(unknown)}")
    names = [c for c in CATEGORIES if mix.get(c, 0) > 0]
    weights = [float(mix[c]) for c in names]
    if not names or any(w < 0 for w in weights):
        raise ValueError("mix weights must be nonnegative with a positive sum")
    cfg = cfg or SlicerConfig()
    bank = bank or TransitionBank.default()
    rewriter = rewriter or IdentityRewriter()
    tokenizer = tokenizer or WordTokenizer()

    pick = random.Random(f"{seed}:mix")
    cursor = 0
    index = 0
    while limit is None or index < limit:
        category = pick.choices(names, weights)[0]
        need = _sources_needed(category, pick)
        if cursor + need > len(sources):
            break
        batch = list(sources[cursor : cursor + need])
        cursor += need
        example_seed = f"{seed}:{index}:{category}"
        dialogue_id = f"{category}-{index:06d}"
        try:
            dialogue = _generate(
                category, batch, bank, rewriter, cfg, tokenizer, example_seed, dialogue_id
            )
        except ForgeError as exc:
            logger.debug("skipping %s: %s", dialogue_id, exc)
            if stats is not None:
                stats.skip(category)
            index += 1
            continue
        if stats is not None:
            stats.observe(dialogue)
        yield dialogue
        index += 1


def _generate(
    category: str,
    batch: list[SourceDialogue],
    bank: TransitionBank,
    rewriter: Rewriter,
    cfg: SlicerConfig,
    tokenizer: Tokenizer,
    seed: str,
    dialogue_id: str,
) -> DuplexDialogue:
    if category == "basic":
        return gen_basic(batch[0], cfg, tokenizer, seed, dialogue_id)
    if category == "topic_interweaving":
        return gen_topic_interweaving(batch, cfg, tokenizer, seed, dialogue_id)
    if category == "generation_termination":
        return gen_termination(batch[0], bank, rewriter, cfg, tokenizer, seed, dialogue_id)
    if category == "regeneration":
        return gen_regeneration(batch[0], bank, rewriter, cfg, tokenizer, seed, dialogue_id)
    if category == "dialogue_reset":
        return gen_dialogue_reset(batch, bank, rewriter, cfg, tokenizer, seed, dialogue_id)
    if category == "back_on_topic":
        return gen_back_on_topic(batch[0], rewriter, cfg, tokenizer, seed, dialogue_id)
    raise ValueError(f"unknown category {category!r}")


def build_corpus(
    sources: Sequence[SourceDialogue],
    mix: dict[str, float] | None = None,
    cfg: SlicerConfig | None = None,
    bank: TransitionBank | None = None,
    rewriter: Rewriter | None = None,
    seed: int = 0,
    tokenizer: Tokenizer | None = None,
    limit: int | None = None,
) -> tuple[list[DuplexDialogue], CorpusStats]:
    """Materialize the stream; convenient for tests and small corpora."""
    stats = CorpusStats()
    dialogues = list(
        iter_corpus(
            sources,
            mix=mix,
            cfg=cfg,
            bank=bank,
            rewriter=rewriter,
            seed=seed,
            tokenizer=tokenizer,
            stats=stats,
            limit=limit,
        )
    )
    return dialogues, stats


def dialogue_to_json(dialogue: DuplexDialogue) -> dict:
    return {
        "id": dialogue.id,
        "category": dialogue.category,
        "pairs": [
            {
                "i": p.tick_index,
                "in": None if p.input.is_idle else p.input.text,
                "out": None if p.output.is_idle else p.output.text,
                "terminal": p.output_terminal,
            }
            for p in dialogue.pairs
        ],
        "injection_meta": dialogue.injection_meta,
    }


def dialogue_from_json(obj: dict, tokenizer: Tokenizer | None = None) -> DuplexDialogue:
    """Rebuild an example from its JSON form, recomputing unit counts."""
    tokenizer = tokenizer or WordTokenizer()
    pairs = []
    for p in obj["pairs"]:
        in_text = p["in"]
        out_text = p["out"]
        inp = (
            idle_slice(USER)
            if in_text is None
            else text_slice(USER, in_text, len(in_text.split()))
        )
        out = (
            idle_slice(ASSISTANT)
            if out_text is None
            else text_slice(ASSISTANT, out_text, len(tokenizer.encode(out_text)))
        )
        pairs.append(
            SlicePair(
                tick_index=p["i"],
                input=inp,
                output=out,
                output_terminal=bool(p.get("terminal", False)),
            )
        )
    return DuplexDialogue(
        id=obj["id"],
        category=obj["category"],
        pairs=tuple(pairs),
        injection_meta=obj.get("injection_meta", {}),
    )


def dumps_line(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def write_corpus(path: str | Path, dialogues: Iterable[DuplexDialogue]) -> int:
    """Write one JSON object per line; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for dialogue in dialogues:
            fh.write(dumps_line(dialogue_to_json(dialogue)))
            fh.write("\n")
            count += 1
    return count


def read_corpus(path: str | Path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: bad JSON: {exc}") from exc


def _messages_from_item(item: object, fallback_id: str) -> SourceDialogue:
    if isinstance(item, dict):
        source_id = str(item.get("id", fallback_id))
        if "data" in item:
            texts = item["data"]
            roles = [USER if i % 2 == 0 else ASSISTANT for i in range(len(texts))]
            messages = tuple(zip(roles, [str(t) for t in texts]))
        elif "messages" in item:
            messages = tuple(
                (str(m["role"]), str(m["content"])) for m in item["messages"]
            )
        else:
            raise ValueError(f"{fallback_id}: need a 'data' or 'messages' field")
    elif isinstance(item, list):
        source_id = fallback_id
        roles = [USER if i % 2 == 0 else ASSISTANT for i in range(len(item))]
        messages = tuple(zip(roles, [str(t) for t in item]))
    else:
        raise ValueError(f"{fallback_id}: unsupported dialogue shape {type(item)}")
    return SourceDialogue(id=source_id, messages=messages)


def read_sources(path: str | Path) -> list[SourceDialogue]:
    """Load alternating-turn dialogues from a JSON/JSONL file or a directory.

    Accepted shapes per dialogue: {"id", "data": [text, ...]} with turns
    alternating user-first, {"id", "messages": [{"role", "content"}, ...]},
    or a bare list of texts.
    """
    path = Path(path)
    if path.is_dir():
        sources: list[SourceDialogue] = []
        for child in sorted(path.iterdir()):
            if child.suffix in (".json", ".jsonl"):
                sources.extend(read_sources(child))
        return sources
    sources = []
    if path.suffix == ".jsonl":
        with open(path, "r", encoding="utf-8") as fh:
            for idx, line in enumerate(fh):
                line = line.strip()
                if not line:
                    continue
                sources.append(
                    _messages_from_item(json.loads(line), f"{path.stem}:{idx}")
                )
    else:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if not isinstance(payload, list):
            payload = [payload]
        for idx, item in enumerate(payload):
            sources.append(_messages_from_item(item, f"{path.stem}:{idx}"))
    return sources
