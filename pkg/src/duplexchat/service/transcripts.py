"""Per-session transcript persistence as JSONL, with an index for listing.

Each transcript file starts with a header line (session id, config
snapshot, outcome) followed by one line per recorded pair. Loading
reconstructs the exact slice-pair history, so a session can be rebuilt
and inspected after the fact.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import threading
from dataclasses import dataclass
from pathlib import Path

from ..protocol import SlicePair
from ..session import DuplexSession, GenConfig
from ..slicing import (
    ASSISTANT,
    SlicerConfig,
    USER,
    WordTokenizer,
    idle_slice,
    text_slice,
)

logger = logging.getLogger(__name__)


@dataclass
class Transcript:
    session_id: str
    config: GenConfig
    outcome: str
    pairs: list[SlicePair]
    timestamps: list[float]


def _config_to_dict(config: GenConfig) -> dict:
    data = dataclasses.asdict(config)
    return data


def _config_from_dict(data: dict) -> GenConfig:
    slicer = SlicerConfig(**data.pop("slicer"))
    return GenConfig(slicer=slicer, **data)


class TranscriptStore:
    """Writes and reads session transcripts under one directory."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, session_id: str) -> Path:
        if not session_id or "/" in session_id or session_id.startswith("."):
            raise IOError(f"unusable session id {session_id!r}")
        return self.root / f"{session_id}.jsonl"

    @property
    def index_path(self) -> Path:
        return self.root / "index.json"

    def save(
        self,
        session: DuplexSession,
        timestamps: list[float] | None = None,
        outcome: str = "closed",
    ) -> Path:
        """Persist the session's recorded history; overwrites the same id."""
        timestamps = timestamps or []
        # timestamps accumulate one per recorded pair, but eviction trims
        # history from the front, so align them by the tail
        offset = max(0, len(timestamps) - len(session.history))
        path = self._path(session.session_id)
        header = {
            "session_id": session.session_id,
            "config": _config_to_dict(session.config),
            "outcome": outcome,
        }
        with self._lock:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(json.dumps(header, ensure_ascii=False, sort_keys=True))
                fh.write("\n")
                for idx, pair in enumerate(session.history):
                    record = {
                        "i": pair.tick_index,
                        "in": None if pair.input.is_idle else pair.input.text,
                        "out": None if pair.output.is_idle else pair.output.text,
                        "terminal": pair.output_terminal,
                        "ts": timestamps[offset + idx]
                        if offset + idx < len(timestamps)
                        else None,
                    }
                    fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
                    fh.write("\n")
            self._update_index(session.session_id, outcome, len(session.history))
        return path

    def _update_index(self, session_id: str, outcome: str, pair_count: int) -> None:
        index: dict = {}
        if self.index_path.exists():
            try:
                index = json.loads(self.index_path.read_text(encoding="utf-8"))
            except json.JSONDecodeError:
                logger.warning("transcript index corrupt; rebuilding")
                index = {}
        index[session_id] = {"outcome": outcome, "pairs": pair_count}
        self.index_path.write_text(
            json.dumps(index, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    def list_sessions(self) -> dict:
        if not self.index_path.exists():
            return {}
        return json.loads(self.index_path.read_text(encoding="utf-8"))

    def load(self, session_id: str) -> Transcript:
        """Read a transcript back; corrupt or missing files raise IOError."""
        path = self._path(session_id)
        if not path.exists():
            raise IOError(f"no transcript for session {session_id}")
        tokenizer = WordTokenizer()
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = [line for line in fh.read().splitlines() if line.strip()]
            if not lines:
                raise IOError(f"empty transcript {path}")
            header = json.loads(lines[0])
            config = _config_from_dict(header["config"])
            pairs: list[SlicePair] = []
            timestamps: list[float] = []
            for line in lines[1:]:
                record = json.loads(line)
                in_text = record["in"]
                out_text = record["out"]
                pairs.append(
                    SlicePair(
                        tick_index=record["i"],
                        input=idle_slice(USER)
                        if in_text is None
                        else text_slice(USER, in_text, len(in_text.split())),
                        output=idle_slice(ASSISTANT)
                        if out_text is None
                        else text_slice(
                            ASSISTANT, out_text, len(tokenizer.encode(out_text))
                        ),
                        output_terminal=bool(record.get("terminal", False)),
                    )
                )
                timestamps.append(record.get("ts"))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise IOError(f"corrupt transcript {path}: {exc}") from exc
        return Transcript(
            session_id=header["session_id"],
            config=config,
            outcome=header.get("outcome", "unknown"),
            pairs=pairs,
            timestamps=timestamps,
        )

    def replay(self, session_id: str) -> DuplexSession:
        """Rebuild a session whose history matches the recorded one exactly."""
        transcript = self.load(session_id)
        return DuplexSession.from_history(
            transcript.config, transcript.pairs, session_id=transcript.session_id
        )
