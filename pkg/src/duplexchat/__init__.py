"""Tick-driven duplex chat: both streams run at once, sliced onto a shared clock."""

from .backends import (
    BackendError,
    BackendHTTPError,
    BackendTimeout,
    CancelToken,
    Chunk,
    GeneratorBackend,
    IDLE_CHUNK,
    MalformedResponse,
    RemoteBackend,
    RemoteBackendConfig,
    ScriptedBackend,
    ScriptedRule,
)
from .clock import Clock, RealClock, VirtualClock
from .protocol import (
    EncodingError,
    SlicePair,
    decode_context,
    encode_context,
    pair_unit_cost,
)
from .session import (
    BackendUnavailable,
    DuplexSession,
    GenConfig,
    InvalidConfig,
    STATUS_CANCELLED,
    STATUS_GENERATING,
    STATUS_IDLE,
)
from .slicing import (
    ASSISTANT,
    USER,
    Slice,
    SlicerConfig,
    Tokenizer,
    WordTokenizer,
    idle_slice,
    reassemble,
    split_assistant_message,
    split_user_message,
    text_slice,
)

__version__ = "0.1.0"

__all__ = [
    "ASSISTANT",
    "BackendError",
    "BackendHTTPError",
    "BackendTimeout",
    "BackendUnavailable",
    "CancelToken",
    "Chunk",
    "Clock",
    "DuplexSession",
    "EncodingError",
    "GenConfig",
    "GeneratorBackend",
    "IDLE_CHUNK",
    "InvalidConfig",
    "MalformedResponse",
    "RealClock",
    "RemoteBackend",
    "RemoteBackendConfig",
    "STATUS_CANCELLED",
    "STATUS_GENERATING",
    "STATUS_IDLE",
    "ScriptedBackend",
    "ScriptedRule",
    "Slice",
    "SlicePair",
    "SlicerConfig",
    "Tokenizer",
    "USER",
    "VirtualClock",
    "WordTokenizer",
    "decode_context",
    "encode_context",
    "idle_slice",
    "pair_unit_cost",
    "reassemble",
    "split_assistant_message",
    "split_user_message",
    "text_slice",
]
