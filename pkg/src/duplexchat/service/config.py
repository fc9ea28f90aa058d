"""Service configuration from TOML/JSON files with environment overrides."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from ..backends import RemoteBackendConfig
from ..session import GenConfig
from ..slicing import SlicerConfig

ENV_PREFIX = "DUPLEX_"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8420
    backend: str = "scripted"
    remote: RemoteBackendConfig = field(
        default_factory=lambda: RemoteBackendConfig(endpoint="http://localhost:8000/v1/chat/completions")
    )
    gen: GenConfig = field(default_factory=GenConfig)
    transcript_dir: str = "transcripts"
    auth_token: str = ""

    def validate(self) -> None:
        if self.backend not in ("scripted", "remote"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if not 1 <= self.port <= 65535:
            raise ValueError(f"port {self.port} out of range")
        self.gen.validate()
        if self.backend == "remote":
            self.remote.validate()


def _from_mapping(data: dict) -> ServiceConfig:
    config = ServiceConfig()
    service = data.get("service", data)
    for name in ("host", "port", "backend", "transcript_dir", "auth_token"):
        if name in service:
            setattr(config, name, service[name])
    if "remote" in data:
        config.remote = dataclasses.replace(config.remote, **data["remote"])
    gen_data = dict(data.get("gen", {}))
    slicer_data = gen_data.pop("slicer", {})
    if gen_data or slicer_data:
        slicer = dataclasses.replace(config.gen.slicer, **slicer_data)
        config.gen = dataclasses.replace(config.gen, slicer=slicer, **gen_data)
    return config


def _apply_env(config: ServiceConfig, env: dict[str, str]) -> ServiceConfig:
    def get(name: str) -> str | None:
        return env.get(ENV_PREFIX + name)

    if get("HOST"):
        config.host = get("HOST")
    if get("PORT"):
        config.port = int(get("PORT"))
    if get("BACKEND"):
        config.backend = get("BACKEND")
    if get("TRANSCRIPT_DIR"):
        config.transcript_dir = get("TRANSCRIPT_DIR")
    if get("AUTH_TOKEN"):
        config.auth_token = get("AUTH_TOKEN")
    remote_fields = {}
    if get("BACKEND_ENDPOINT"):
        remote_fields["endpoint"] = get("BACKEND_ENDPOINT")
    if get("BACKEND_MODEL"):
        remote_fields["model"] = get("BACKEND_MODEL")
    if get("BACKEND_AUTH_ENV"):
        remote_fields["auth_env"] = get("BACKEND_AUTH_ENV")
    if get("BACKEND_TIMEOUT_S"):
        remote_fields["timeout_s"] = float(get("BACKEND_TIMEOUT_S"))
    if remote_fields:
        config.remote = dataclasses.replace(config.remote, **remote_fields)
    gen_fields = {}
    if get("TICK_SECONDS"):
        gen_fields["tick_seconds"] = float(get("TICK_SECONDS"))
    if get("MAX_TOKENS_PER_CHUNK"):
        gen_fields["max_tokens_per_chunk"] = int(get("MAX_TOKENS_PER_CHUNK"))
    if get("MAX_CONTEXT"):
        gen_fields["max_context"] = int(get("MAX_CONTEXT"))
    if gen_fields:
        config.gen = dataclasses.replace(config.gen, **gen_fields)
    return config


def load_config(
    path: str | Path | None = None, env: dict[str, str] | None = None
) -> ServiceConfig:
    """Read a config file (TOML or JSON by extension), then apply env overrides."""
    env = os.environ if env is None else env
    if path is None:
        config = ServiceConfig()
    else:
        path = Path(path)
        if path.suffix == ".json":
            data = json.loads(path.read_text(encoding="utf-8"))
        else:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        config = _from_mapping(data)
    config = _apply_env(config, dict(env))
    config.validate()
    return config
