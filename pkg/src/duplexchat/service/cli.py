"""duplex-serve: run the session server."""

from __future__ import annotations

import argparse
import logging
import sys

import uvicorn

from .app import create_app
from .config import load_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duplex-serve", description="Serve duplex chat sessions."
    )
    parser.add_argument("--config", default=None, help="TOML or JSON config file")
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    parser.add_argument("--backend", choices=("scripted", "remote"), default=None)
    parser.add_argument("--endpoint", default=None, help="remote backend URL")
    parser.add_argument("--model", default=None, help="remote backend model name")
    parser.add_argument("--transcripts", default=None, help="transcript directory")
    parser.add_argument("--tick", type=float, default=None, help="tick seconds")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    import dataclasses

    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 1
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    if args.backend:
        config.backend = args.backend
    if args.endpoint:
        config.remote = dataclasses.replace(config.remote, endpoint=args.endpoint)
    if args.model:
        config.remote = dataclasses.replace(config.remote, model=args.model)
    if args.transcripts:
        config.transcript_dir = args.transcripts
    if args.tick:
        config.gen = dataclasses.replace(config.gen, tick_seconds=args.tick)
    try:
        config.validate()
    except ValueError as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 1
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
