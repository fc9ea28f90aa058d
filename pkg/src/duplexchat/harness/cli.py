"""Command line for the scenario harness: run suites, concat-eval instructions."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..backends import RemoteBackend, RemoteBackendConfig, ScriptedBackend, ScriptedRule
from ..session import GenConfig
from .concat import concat_eval, read_instructions, write_results
from .scenarios import default_scenarios, load_suite, run_scenarios

logger = logging.getLogger(__name__)


def _backend_factory(args: argparse.Namespace):
    if args.backend == "remote":
        if not args.endpoint:
            raise SystemExit("--backend remote requires --endpoint")
        remote_config = RemoteBackendConfig(
            endpoint=args.endpoint, model=args.model, auth_env=args.auth_env
        )
        return lambda: RemoteBackend(remote_config)
    if getattr(args, "echo", False):
        return lambda: ScriptedBackend(ScriptedRule.echo())
    return ScriptedBackend


def cmd_run(args: argparse.Namespace) -> int:
    scenarios = load_suite(args.suite) if args.suite else default_scenarios()
    if not scenarios:
        print("no scenarios found", file=sys.stderr)
        return 1
    report = run_scenarios(scenarios, _backend_factory(args), GenConfig())
    print(report.summary())
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote report to {args.report}")
    return 0 if report.all_passed else 1


def cmd_concat_eval(args: argparse.Namespace) -> int:
    instructions = read_instructions(args.instructions)
    if not instructions:
        print("no instructions found", file=sys.stderr)
        return 1
    results = concat_eval(
        instructions, _backend_factory(args), GenConfig(), max_ticks=args.max_ticks
    )
    write_results(args.out, results)
    ok = sum(1 for r in results if "output" in r)
    failed = len(results) - ok
    print(f"evaluated {len(results)} instructions: {ok} ok, {failed} failed")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harness", description="Exercise duplex sessions with scripted scenarios."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario suite")
    p_run.add_argument("--suite", default=None, help="scenario JSON file or directory")
    p_run.add_argument("--report", default=None, help="write metrics JSON here")
    p_run.add_argument("--backend", choices=("scripted", "remote"), default="scripted")
    p_run.add_argument("--endpoint", default="")
    p_run.add_argument("--model", default="")
    p_run.add_argument("--auth-env", default="")
    p_run.set_defaults(func=cmd_run)

    p_concat = sub.add_parser(
        "concat-eval", help="feed whole instructions through the tick protocol"
    )
    p_concat.add_argument("--instructions", required=True)
    p_concat.add_argument("--out", required=True)
    p_concat.add_argument("--max-ticks", type=int, default=1000)
    p_concat.add_argument("--backend", choices=("scripted", "remote"), default="scripted")
    p_concat.add_argument("--echo", action="store_true", help="scripted echo responses")
    p_concat.add_argument("--endpoint", default="")
    p_concat.add_argument("--model", default="")
    p_concat.add_argument("--auth-env", default="")
    p_concat.set_defaults(func=cmd_concat_eval)
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
