"""Instruction-following evaluation over the tick protocol.

Each instruction is submitted whole to a fresh session; the tick loop feeds
it slice by slice, the backend responds chunk by chunk, and the reassembled
response is written out once the terminal slice arrives.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterable

from ..backends import GeneratorBackend, ScriptedBackend
from ..session import BackendUnavailable, DuplexSession, GenConfig
from ..slicing import reassemble

logger = logging.getLogger(__name__)


def read_instructions(path: str | Path) -> list[dict]:
    """Load {"id", "instruction"} rows from JSONL (or a JSON list)."""
    path = Path(path)
    rows: list[dict] = []
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".jsonl":
        items = [json.loads(line) for line in text.splitlines() if line.strip()]
    else:
        items = json.loads(text)
    for idx, item in enumerate(items):
        if isinstance(item, str):
            rows.append({"id": f"instr-{idx:04d}", "instruction": item})
        else:
            rows.append(
                {
                    "id": str(item.get("id", f"instr-{idx:04d}")),
                    "instruction": str(
                        item.get("instruction", item.get("text", ""))
                    ),
                }
            )
    return rows


def eval_one(
    instruction: str,
    backend: GeneratorBackend,
    config: GenConfig | None = None,
    max_ticks: int = 1000,
) -> str:
    """Run one instruction to its terminal slice and reassemble the response.

    Raises RuntimeError if no terminal slice arrives within max_ticks.
    """
    config = config or GenConfig()
    session = DuplexSession(config)
    session.submit_input(instruction)
    outputs = []
    for _ in range(max_ticks):
        output = session.tick(backend)
        if not output.is_idle:
            outputs.append(output)
            if session.history[-1].output_terminal:
                return reassemble(outputs)
    raise RuntimeError(f"no terminal response within {max_ticks} ticks")


def concat_eval(
    instructions: Iterable[dict],
    backend_factory=ScriptedBackend,
    config: GenConfig | None = None,
    max_ticks: int = 1000,
) -> list[dict]:
    """Evaluate every instruction; failures become error rows, not crashes."""
    results: list[dict] = []
    for row in instructions:
        row_id = row["id"]
        instruction = row.get("instruction", "")
        if not instruction.split():
            logger.warning("skipping %s: empty instruction", row_id)
            results.append({"id": row_id, "error": "empty instruction"})
            continue
        try:
            output = eval_one(instruction, backend_factory(), config, max_ticks)
        except (RuntimeError, BackendUnavailable) as exc:
            logger.warning("instruction %s failed: %s", row_id, exc)
            results.append({"id": row_id, "error": str(exc)})
            continue
        results.append({"id": row_id, "instruction": instruction, "output": output})
    return results


def write_results(path: str | Path, results: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in results:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
            fh.write("\n")
