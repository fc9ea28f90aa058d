"""Scenario runner and metrics for exercising duplex sessions."""

from .concat import concat_eval, read_instructions, write_results
from .scenarios import (
    MetricsReport,
    Scenario,
    ScenarioEvent,
    ScenarioResult,
    default_scenarios,
    load_suite,
    run_scenario,
    run_scenarios,
)

__all__ = [
    "MetricsReport",
    "Scenario",
    "ScenarioEvent",
    "ScenarioResult",
    "concat_eval",
    "default_scenarios",
    "load_suite",
    "read_instructions",
    "run_scenario",
    "run_scenarios",
    "write_results",
]
