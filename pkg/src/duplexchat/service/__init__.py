"""Streaming session server: wire schema, lifecycle, transcripts, configuration."""

from .app import create_app
from .config import ServiceConfig, load_config
from .manager import ManagedSession, SessionManager
from .schemas import (
    CLIENT_TO_SERVER,
    ConfigOverrides,
    OpenSessionRequest,
    SERVER_TO_CLIENT,
    SessionInfo,
    WireMessage,
)
from .transcripts import TranscriptStore

__all__ = [
    "CLIENT_TO_SERVER",
    "ConfigOverrides",
    "ManagedSession",
    "OpenSessionRequest",
    "SERVER_TO_CLIENT",
    "ServiceConfig",
    "SessionInfo",
    "SessionManager",
    "TranscriptStore",
    "WireMessage",
    "create_app",
    "load_config",
]
