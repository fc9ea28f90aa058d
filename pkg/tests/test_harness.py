"""Scenario harness, metrics, concat evaluation, and the harness CLI."""

import json

import pytest

from duplexchat.backends import ScriptedBackend, ScriptedRule
from duplexchat.harness.cli import main as harness_main
from duplexchat.harness.concat import (
    concat_eval,
    eval_one,
    read_instructions,
    write_results,
)
from duplexchat.harness.scenarios import (
    MetricsReport,
    Scenario,
    ScenarioEvent,
    default_scenarios,
    load_suite,
    run_scenario,
    run_scenarios,
)
from duplexchat.session import GenConfig
from duplexchat.slicing import SlicerConfig, normalize_ws


def echo_factory():
    return ScriptedBackend(ScriptedRule.echo())


def test_event_validation():
    with pytest.raises(ValueError):
        ScenarioEvent(tick=-1, action="send", text="x")
    with pytest.raises(ValueError):
        ScenarioEvent(tick=0, action="ponder")
    with pytest.raises(ValueError):
        ScenarioEvent(tick=0, action="send", text="  ")


def test_scenario_validation():
    ok = (ScenarioEvent(0, "send", "hi there?"),)
    with pytest.raises(ValueError):
        Scenario(name="", events=ok)
    with pytest.raises(ValueError):
        Scenario(name="x", events=ok, kind="dream")
    with pytest.raises(ValueError):
        Scenario(
            name="x",
            events=(ScenarioEvent(3, "expect_idle"), ScenarioEvent(1, "expect_idle")),
        )
    with pytest.raises(ValueError):
        Scenario(name="x", events=(ScenarioEvent(40, "expect_idle"),), max_ticks=32)


def test_run_scenario_latency_zero():
    scenario = Scenario(
        name="echo",
        kind="latency",
        events=(
            ScenarioEvent(0, "send", "short and sweet?"),
            ScenarioEvent(0, "expect_text"),
        ),
        max_ticks=4,
    )
    result = run_scenario(scenario, echo_factory())
    assert result.passed
    assert result.latency == 0
    assert result.expect_text_ok == 1


def test_run_scenario_failure_recorded():
    scenario = Scenario(
        name="wrong-expectation",
        events=(
            ScenarioEvent(0, "send", "short and sweet?"),
            ScenarioEvent(0, "expect_idle"),
        ),
        max_ticks=4,
    )
    result = run_scenario(scenario, echo_factory())
    assert not result.passed
    assert result.expect_idle_ok == 0
    assert "expected idle" in result.failures[0]


def test_run_scenario_trace_records_ticks():
    scenario = Scenario(
        name="trace",
        events=(ScenarioEvent(0, "send", "hello there my friend?"),),
        max_ticks=4,
    )
    result = run_scenario(scenario, echo_factory())
    recorded = [t for t in result.trace if t.recorded_index is not None]
    assert recorded
    indices = [t.recorded_index for t in recorded]
    assert indices == sorted(indices)


def test_default_scenarios_all_pass():
    report = run_scenarios(default_scenarios())
    assert report.all_passed, report.summary()
    assert report.idle_compliance == 1.0
    assert report.text_compliance == 1.0
    assert report.termination_compliance == 1.0


def test_consumption_lag_within_one_tick():
    scenario = Scenario(
        name="interrupt-consumption",
        kind="termination",
        events=(
            ScenarioEvent(0, "send", " ".join(f"w{i}" for i in range(22)) + " end?"),
            ScenarioEvent(5, "send", "stop right there please now, this is more important stuff?"),
        ),
        max_ticks=20,
    )
    result = run_scenario(scenario, echo_factory())
    assert result.consumption_lags
    assert all(lag <= 1 for lag in result.consumption_lags)


def test_metrics_report_recount():
    report = run_scenarios(default_scenarios())
    latencies = {}
    for r in report.results:
        key = "none" if r.latency is None else str(r.latency)
        latencies[key] = latencies.get(key, 0) + 1
    assert report.latency_distribution == latencies
    idle_total = sum(r.expect_idle_total for r in report.results)
    idle_ok = sum(r.expect_idle_ok for r in report.results)
    assert report.idle_compliance == idle_ok / idle_total
    payload = report.to_dict()
    assert payload["all_passed"] is True
    assert len(payload["scenarios"]) == len(report.results)


def test_load_suite_file_and_dir(tmp_path):
    single = {
        "name": "one",
        "kind": "idle",
        "events": [{"tick": 0, "action": "expect_idle"}],
        "max_ticks": 4,
    }
    file_path = tmp_path / "one.json"
    file_path.write_text(json.dumps([single, dict(single, name="two")]), encoding="utf-8")
    scenarios = load_suite(file_path)
    assert [s.name for s in scenarios] == ["one", "two"]

    suite_dir = tmp_path / "suite"
    suite_dir.mkdir()
    (suite_dir / "a.json").write_text(json.dumps(single), encoding="utf-8")
    (suite_dir / "b.json").write_text(json.dumps(dict(single, name="three")), encoding="utf-8")
    scenarios = load_suite(suite_dir)
    assert [s.name for s in scenarios] == ["one", "three"]


# --- concat evaluation ---


def test_eval_one_echo_verbatim():
    instruction = " ".join(f"word{i}" for i in range(35)) + " finish."
    output = eval_one(instruction, echo_factory())
    assert output == normalize_ws(instruction)


def test_eval_one_times_out_without_terminal():
    with pytest.raises(RuntimeError):
        eval_one("never any punctuation here", echo_factory(), max_ticks=30)


def test_read_instructions_shapes(tmp_path):
    path = tmp_path / "instr.jsonl"
    path.write_text(
        '{"id": "a", "instruction": "do the first thing."}\n'
        '"just a bare string."\n'
        '{"text": "from a text field."}\n',
        encoding="utf-8",
    )
    rows = read_instructions(path)
    assert rows[0] == {"id": "a", "instruction": "do the first thing."}
    assert rows[1]["instruction"] == "just a bare string."
    assert rows[1]["id"] == "instr-0001"
    assert rows[2]["instruction"] == "from a text field."

    json_path = tmp_path / "instr.json"
    json_path.write_text('["alpha beta gamma."]', encoding="utf-8")
    assert read_instructions(json_path)[0]["instruction"] == "alpha beta gamma."


def test_concat_eval_rows(tmp_path):
    instructions = [
        {"id": "good", "instruction": "repeat this exact sentence back."},
        {"id": "empty", "instruction": "   "},
    ]
    results = concat_eval(instructions, echo_factory)
    assert results[0]["output"] == "repeat this exact sentence back."
    assert results[1] == {"id": "empty", "error": "empty instruction"}
    out = tmp_path / "results.jsonl"
    write_results(out, results)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert json.loads(lines[0])["id"] == "good"


# --- CLI ---


def test_cli_run_default_suite(capsys, tmp_path):
    report_path = tmp_path / "report.json"
    code = harness_main(["run", "--report", str(report_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS" in out
    assert "idle_compliance=1.000" in out
    payload = json.loads(report_path.read_text(encoding="utf-8"))
    assert payload["all_passed"] is True


def test_cli_run_failing_suite(capsys, tmp_path):
    suite = [
        {
            "name": "impossible",
            "events": [{"tick": 0, "action": "expect_text"}],
            "max_ticks": 2,
        }
    ]
    path = tmp_path / "suite.json"
    path.write_text(json.dumps(suite), encoding="utf-8")
    code = harness_main(["run", "--suite", str(path)])
    out = capsys.readouterr().out
    assert code == 1
    assert "FAIL" in out


def test_cli_concat_eval_echo(capsys, tmp_path):
    instr = tmp_path / "instr.jsonl"
    instr.write_text(
        '{"id": "i0", "instruction": "say this back to me word for word please."}\n',
        encoding="utf-8",
    )
    out_path = tmp_path / "out.jsonl"
    code = harness_main(
        ["concat-eval", "--instructions", str(instr), "--out", str(out_path), "--echo"]
    )
    assert code == 0
    row = json.loads(out_path.read_text(encoding="utf-8").splitlines()[0])
    assert row["output"] == row["instruction"]
    assert "1 ok" not in capsys.readouterr().err
