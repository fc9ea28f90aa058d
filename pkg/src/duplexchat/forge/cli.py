"""Command line for the dataset pipeline: build, validate, stats."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..slicing import SlicerConfig
from .corpus import (
    CorpusStats,
    dialogue_from_json,
    dialogue_to_json,
    dumps_line,
    iter_corpus,
    read_corpus,
    read_sources,
)
from .models import CATEGORIES
from .rewriter import IdentityRewriter, RemoteRewriter
from .validate import validate_dialogue

logger = logging.getLogger(__name__)

_MIX_ALIASES = {
    "basic": "basic",
    "topic": "topic_interweaving",
    "interweaving": "topic_interweaving",
    "topic_interweaving": "topic_interweaving",
    "term": "generation_termination",
    "termination": "generation_termination",
    "generation_termination": "generation_termination",
    "regen": "regeneration",
    "regeneration": "regeneration",
    "reset": "dialogue_reset",
    "dialogue_reset": "dialogue_reset",
    "back": "back_on_topic",
    "back_on_topic": "back_on_topic",
}


def parse_mix(text: str) -> dict[str, float]:
    mix: dict[str, float] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"bad mix entry {part!r}, expected name=weight")
        name, _, value = part.partition("=")
        key = _MIX_ALIASES.get(name.strip().lower())
        if key is None:
            raise ValueError(f"unknown category {name.strip()!r}")
        mix[key] = float(value)
    if not mix:
        raise ValueError("empty mix")
    return mix


def _build_rewriter(args: argparse.Namespace):
    if args.rewriter == "identity":
        return IdentityRewriter()
    if not args.rewriter_endpoint:
        raise SystemExit("--rewriter remote requires --rewriter-endpoint")
    return RemoteRewriter(
        endpoint=args.rewriter_endpoint,
        model=args.rewriter_model,
        auth_env=args.rewriter_auth_env,
    )


def cmd_build(args: argparse.Namespace) -> int:
    sources = read_sources(args.input)
    if not sources:
        print("no source dialogues found", file=sys.stderr)
        return 1
    mix = parse_mix(args.mix) if args.mix else None
    cfg = SlicerConfig(
        user_width_min=args.user_width_min,
        user_width_max=args.user_width_max,
        assistant_chunk_tokens=args.chunk_tokens,
    )
    stats = CorpusStats()
    count = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for dialogue in iter_corpus(
            sources,
            mix=mix,
            cfg=cfg,
            rewriter=_build_rewriter(args),
            seed=args.seed,
            stats=stats,
            limit=args.limit,
        ):
            fh.write(dumps_line(dialogue_to_json(dialogue)))
            fh.write("\n")
            count += 1
    print(f"wrote {count} dialogues to {args.out}")
    print(stats.table())
    if args.stats_out:
        with open(args.stats_out, "w", encoding="utf-8") as fh:
            json.dump(stats.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    counts: dict[str, int] = {}
    failures = 0
    for line_no, obj in enumerate(read_corpus(args.file), 1):
        try:
            dialogue = dialogue_from_json(obj)
        except (KeyError, ValueError) as exc:
            print(f"line {line_no}: cannot parse: {exc}", file=sys.stderr)
            failures += 1
            continue
        problems = validate_dialogue(dialogue)
        counts[dialogue.category] = counts.get(dialogue.category, 0) + 1
        if problems:
            failures += 1
            for problem in problems:
                print(f"line {line_no} ({dialogue.id}): {problem}", file=sys.stderr)
    for name in CATEGORIES:
        if name in counts:
            print(f"{name}: {counts[name]}")
    total = sum(counts.values())
    if failures:
        print(f"{failures} of {total} dialogues failed validation", file=sys.stderr)
        return 1
    print(f"all {total} dialogues valid")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    stats = CorpusStats()
    for obj in read_corpus(args.file):
        dialogue = dialogue_from_json(obj)
        stats.observe(dialogue)
    if args.json:
        json.dump(stats.to_dict(), sys.stdout, indent=2, sort_keys=True)
        print()
    else:
        print(stats.table())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forge", description="Build and inspect duplex training corpora."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="generate a corpus from source dialogues")
    p_build.add_argument("--input", required=True, help="source JSON/JSONL file or directory")
    p_build.add_argument("--out", required=True, help="output JSONL path")
    p_build.add_argument(
        "--mix",
        default=None,
        help="category weights, e.g. basic=0.3,term=0.3,regen=0.2 (default: reference mix)",
    )
    p_build.add_argument("--seed", type=int, default=0)
    p_build.add_argument("--limit", type=int, default=None, help="max examples to attempt")
    p_build.add_argument("--user-width-min", type=int, default=4)
    p_build.add_argument("--user-width-max", type=int, default=6)
    p_build.add_argument("--chunk-tokens", type=int, default=10)
    p_build.add_argument("--rewriter", choices=("identity", "remote"), default="identity")
    p_build.add_argument("--rewriter-endpoint", default="")
    p_build.add_argument("--rewriter-model", default="")
    p_build.add_argument("--rewriter-auth-env", default="")
    p_build.add_argument("--stats-out", default=None, help="also write stats as JSON")
    p_build.set_defaults(func=cmd_build)

    p_validate = sub.add_parser("validate", help="structurally check a corpus file")
    p_validate.add_argument("file")
    p_validate.set_defaults(func=cmd_validate)

    p_stats = sub.add_parser("stats", help="recompute statistics from a corpus file")
    p_stats.add_argument("file")
    p_stats.add_argument("--json", action="store_true")
    p_stats.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
