"""Wire-level request/response models shared by the HTTP and WebSocket surfaces."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, model_validator

from ..session import GenConfig
from ..slicing import SlicerConfig
import dataclasses

CLIENT_TO_SERVER = "client_to_server"
SERVER_TO_CLIENT = "server_to_client"

# frame types a client may send / a server may send
_CLIENT_TYPES = {"open", "input_chunk", "close"}
_SERVER_TYPES = {"open", "output_chunk", "idle_notice", "session_closed", "error"}


class ConfigOverrides(BaseModel):
    """Optional per-session settings; unset fields keep server defaults."""

    model_config = ConfigDict(extra="forbid")

    tick_seconds: Optional[float] = None
    max_tokens_per_chunk: Optional[int] = None
    temperature: Optional[float] = None
    top_p: Optional[float] = None
    top_k: Optional[int] = None
    max_context: Optional[int] = None
    user_width_min: Optional[int] = None
    user_width_max: Optional[int] = None
    rng_seed: Optional[int] = None

    def apply(self, base: GenConfig) -> GenConfig:
        """Overlay onto a base config; validation happens in the session."""
        slicer_fields = {}
        for name in ("user_width_min", "user_width_max", "rng_seed"):
            value = getattr(self, name)
            if value is not None:
                slicer_fields[name] = value
        slicer = (
            dataclasses.replace(base.slicer, **slicer_fields)
            if slicer_fields
            else base.slicer
        )
        gen_fields = {}
        for name in (
            "tick_seconds",
            "max_tokens_per_chunk",
            "temperature",
            "top_p",
            "top_k",
            "max_context",
        ):
            value = getattr(self, name)
            if value is not None:
                gen_fields[name] = value
        return dataclasses.replace(base, slicer=slicer, **gen_fields)


class WireMessage(BaseModel):
    """One JSON frame on the duplex socket.

    input_chunk travels only client to server; output_chunk and idle_notice
    only server to client. tick_index counts the server's wall ticks and is
    monotone per session.
    """

    model_config = ConfigDict(extra="forbid")

    direction: Literal["client_to_server", "server_to_client"]
    type: Literal[
        "open",
        "input_chunk",
        "close",
        "output_chunk",
        "idle_notice",
        "session_closed",
        "error",
    ]
    session_id: Optional[str] = None
    tick_index: Optional[int] = None
    text: Optional[str] = None
    terminal: bool = False
    timestamp: Optional[float] = None
    error: Optional[str] = None
    config: Optional[ConfigOverrides] = None
    token: Optional[str] = None

    @model_validator(mode="after")
    def _check_direction(self) -> "WireMessage":
        if self.direction == CLIENT_TO_SERVER and self.type not in _CLIENT_TYPES:
            raise ValueError(f"{self.type} frames do not travel client to server")
        if self.direction == SERVER_TO_CLIENT and self.type not in _SERVER_TYPES:
            raise ValueError(f"{self.type} frames do not travel server to client")
        return self


class OpenSessionRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: Optional[ConfigOverrides] = None
    token: Optional[str] = None


class SessionInfo(BaseModel):
    session_id: str
    gen_status: str
    wall_tick: int
    recorded_pairs: int
    total_units: int
    tick_seconds: float


class PairRecord(BaseModel):
    i: int
    input: Optional[str] = None
    output: Optional[str] = None
    terminal: bool = False


class SessionHistory(BaseModel):
    session_id: str
    pairs: list[PairRecord]
