"""Scripted conversation scenarios driven on a virtual clock, with metrics.

A scenario is a list of timed events: user sends, deliberate silences, and
expectations about the output stream. The runner plays them against a fresh
session tick by tick and derives latency and compliance numbers from the
recorded history.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from ..backends import GeneratorBackend, ScriptedBackend, ScriptedRule
from ..session import (
    BackendUnavailable,
    DuplexSession,
    GenConfig,
    STATUS_GENERATING,
)
from ..slicing import SlicerConfig

logger = logging.getLogger(__name__)

ACTIONS = ("send", "silent", "expect_idle", "expect_text")
KINDS = ("generic", "idle", "latency", "termination")


@dataclass(frozen=True)
class ScenarioEvent:
    tick: int
    action: str
    text: str = ""

    def __post_init__(self) -> None:
        if self.tick < 0:
            raise ValueError("event tick must be >= 0")
        if self.action not in ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")
        if self.action == "send" and not self.text.split():
            raise ValueError("send events need text")


@dataclass(frozen=True)
class Scenario:
    """send/silent events apply just before their tick runs; expectations
    are checked against that tick's output slice."""

    name: str
    events: tuple[ScenarioEvent, ...]
    kind: str = "generic"
    max_ticks: int = 32

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if not self.name:
            raise ValueError("scenario needs a name")
        last = -1
        for event in self.events:
            if event.tick < last:
                raise ValueError(f"{self.name}: events must be tick-ordered")
            last = event.tick
        if self.events and self.events[-1].tick >= self.max_ticks:
            raise ValueError(f"{self.name}: events extend past max_ticks")


@dataclass
class TickTrace:
    wall_tick: int
    input_text: str | None
    output_text: str | None
    terminal: bool
    recorded_index: int | None


@dataclass
class ScenarioResult:
    name: str
    kind: str
    passed: bool
    failures: list[str]
    latency: int | None
    expect_idle_total: int = 0
    expect_idle_ok: int = 0
    expect_text_total: int = 0
    expect_text_ok: int = 0
    consumption_lags: list[int] = field(default_factory=list)
    trace: list[TickTrace] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "passed": self.passed,
            "failures": self.failures,
            "latency": self.latency,
            "expect_idle": [self.expect_idle_ok, self.expect_idle_total],
            "expect_text": [self.expect_text_ok, self.expect_text_total],
            "consumption_lags": self.consumption_lags,
        }


def run_scenario(
    scenario: Scenario,
    backend: GeneratorBackend | None = None,
    config: GenConfig | None = None,
) -> ScenarioResult:
    backend = backend or ScriptedBackend()
    config = config or GenConfig(slicer=SlicerConfig(rng_seed=0))
    session = DuplexSession(config)
    by_tick: dict[int, list[ScenarioEvent]] = {}
    for event in scenario.events:
        by_tick.setdefault(event.tick, []).append(event)

    result = ScenarioResult(
        name=scenario.name, kind=scenario.kind, passed=True, failures=[], latency=None
    )
    pending_consumption: list[tuple[int, str]] = []  # (submit tick, first word)

    for wall_tick in range(scenario.max_ticks):
        for event in by_tick.get(wall_tick, ()):
            if event.action == "send":
                if session.gen_status == STATUS_GENERATING:
                    pending_consumption.append((wall_tick, event.text.split()[0]))
                session.submit_input(event.text)
        before = session.next_tick_index
        try:
            output = session.tick(backend)
        except BackendUnavailable as exc:
            result.failures.append(f"tick {wall_tick}: backend failed: {exc}")
            continue
        recorded = session.next_tick_index > before
        input_text = session.history[-1].input.text if recorded else None
        if recorded and session.history[-1].input.is_idle:
            input_text = None
        result.trace.append(
            TickTrace(
                wall_tick=wall_tick,
                input_text=input_text,
                output_text=None if output.is_idle else output.text,
                terminal=recorded and session.history[-1].output_terminal,
                recorded_index=session.history[-1].tick_index if recorded else None,
            )
        )
        if input_text is not None and pending_consumption:
            words = set(input_text.split())
            still_waiting = []
            for submit_tick, first_word in pending_consumption:
                if first_word in words:
                    result.consumption_lags.append(wall_tick - submit_tick)
                else:
                    still_waiting.append((submit_tick, first_word))
            pending_consumption = still_waiting
        for event in by_tick.get(wall_tick, ()):
            if event.action == "expect_idle":
                result.expect_idle_total += 1
                if output.is_idle:
                    result.expect_idle_ok += 1
                else:
                    result.failures.append(
                        f"tick {wall_tick}: expected idle, got {output.text!r}"
                    )
            elif event.action == "expect_text":
                result.expect_text_total += 1
                if not output.is_idle:
                    result.expect_text_ok += 1
                else:
                    result.failures.append(f"tick {wall_tick}: expected text, got idle")

    result.latency = _first_response_latency(session)
    result.passed = not result.failures
    return result


def _first_response_latency(session: DuplexSession) -> int | None:
    """Recorded ticks between the first query's completion and its response."""
    first_response = None
    for pair in session.history:
        if not pair.output.is_idle:
            first_response = pair.tick_index
            break
    if first_response is None:
        return None
    query_end = None
    for pair in session.history:
        if pair.tick_index > first_response:
            break
        if not pair.input.is_idle:
            query_end = pair.tick_index
    if query_end is None:
        return None
    return first_response - query_end


@dataclass
class MetricsReport:
    results: list[ScenarioResult]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def latency_distribution(self) -> dict[str, int]:
        dist: dict[str, int] = {}
        for r in self.results:
            key = "none" if r.latency is None else str(r.latency)
            dist[key] = dist.get(key, 0) + 1
        return dist

    @property
    def idle_compliance(self) -> float:
        total = sum(r.expect_idle_total for r in self.results)
        ok = sum(r.expect_idle_ok for r in self.results)
        return ok / total if total else 1.0

    @property
    def text_compliance(self) -> float:
        total = sum(r.expect_text_total for r in self.results)
        ok = sum(r.expect_text_ok for r in self.results)
        return ok / total if total else 1.0

    @property
    def termination_compliance(self) -> float:
        termination = [r for r in self.results if r.kind == "termination"]
        if not termination:
            return 1.0
        return sum(1 for r in termination if r.passed) / len(termination)

    @property
    def consumption_lags(self) -> list[int]:
        lags: list[int] = []
        for r in self.results:
            lags.extend(r.consumption_lags)
        return lags

    def to_dict(self) -> dict:
        lags = self.consumption_lags
        return {
            "scenarios": [r.to_dict() for r in self.results],
            "all_passed": self.all_passed,
            "latency_distribution": self.latency_distribution,
            "idle_compliance": self.idle_compliance,
            "text_compliance": self.text_compliance,
            "termination_compliance": self.termination_compliance,
            "consumption_lag_avg": sum(lags) / len(lags) if lags else None,
            "consumption_lag_max": max(lags) if lags else None,
        }

    def summary(self) -> str:
        lines = []
        for r in self.results:
            mark = "PASS" if r.passed else "FAIL"
            extra = f" latency={r.latency}" if r.latency is not None else ""
            lines.append(f"{mark} {r.name} [{r.kind}]{extra}")
            for failure in r.failures:
                lines.append(f"     {failure}")
        lines.append(
            "idle_compliance={:.3f} text_compliance={:.3f} termination_compliance={:.3f}".format(
                self.idle_compliance, self.text_compliance, self.termination_compliance
            )
        )
        return "\n".join(lines)


def run_scenarios(
    scenarios: Sequence[Scenario],
    backend_factory: Callable[[], GeneratorBackend] | None = None,
    config: GenConfig | None = None,
) -> MetricsReport:
    factory = backend_factory or ScriptedBackend
    return MetricsReport(
        results=[run_scenario(s, factory(), config) for s in scenarios]
    )


def _scenario_from_dict(obj: dict) -> Scenario:
    events = tuple(
        ScenarioEvent(
            tick=int(e["tick"]), action=e["action"], text=e.get("text", "")
        )
        for e in obj.get("events", [])
    )
    return Scenario(
        name=obj["name"],
        events=events,
        kind=obj.get("kind", "generic"),
        max_ticks=int(obj.get("max_ticks", 32)),
    )


def load_suite(path: str | Path) -> list[Scenario]:
    """Read scenarios from a JSON file or every *.json in a directory."""
    path = Path(path)
    files = sorted(path.glob("*.json")) if path.is_dir() else [path]
    scenarios: list[Scenario] = []
    for file in files:
        payload = json.loads(file.read_text(encoding="utf-8"))
        items = payload if isinstance(payload, list) else [payload]
        for item in items:
            scenarios.append(_scenario_from_dict(item))
    return scenarios


def default_scenarios() -> list[Scenario]:
    """A small built-in suite covering silence, latency, and interruption."""
    return [
        Scenario(
            name="silence-stays-idle",
            kind="idle",
            events=tuple(
                ScenarioEvent(tick=t, action="expect_idle") for t in range(6)
            ),
            max_ticks=8,
        ),
        Scenario(
            name="single-query-latency",
            kind="latency",
            events=(
                ScenarioEvent(tick=0, action="send", text="what is the fastest way home?"),
                ScenarioEvent(tick=0, action="expect_idle"),
                ScenarioEvent(tick=2, action="expect_text"),
            ),
            max_ticks=12,
        ),
        Scenario(
            name="barge-in-goes-quiet",
            kind="termination",
            events=(
                ScenarioEvent(tick=0, action="send", text="please describe a very long journey in detail?"),
                ScenarioEvent(
                    tick=3,
                    action="send",
                    text="hold on please stop for a second, tell me about trains instead?",
                ),
                ScenarioEvent(tick=3, action="expect_idle"),
                ScenarioEvent(tick=6, action="expect_text"),
            ),
            max_ticks=16,
        ),
        Scenario(
            name="quiet-after-response",
            kind="idle",
            events=(
                ScenarioEvent(tick=0, action="send", text="say something brief now please?"),
                ScenarioEvent(tick=10, action="expect_idle"),
                ScenarioEvent(tick=11, action="expect_idle"),
            ),
            max_ticks=12,
        ),
    ]
