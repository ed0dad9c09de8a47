"""Engine configuration: JSON file plus NAIAD_-prefixed env overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from urllib.parse import urlparse

from .aquatools import DEFAULT_BLOOM_THRESHOLDS, DEFAULT_CHL_COEFFICIENTS
from .errors import ConfigInvalid

ENV_PREFIX = "NAIAD_"


@dataclass
class EngineConfig:
    provider_url: str = "http://localhost:11434/api/generate"
    provider_model: str = "qwen2.5:14b"
    embedding_url: str = "http://localhost:8081/embed"
    embedding_model: str = "BAAI/bge-large-en-v1.5"
    workers: int = 4
    retry_default: int = 2
    retry_delay: float = 1.0
    remote_timeout: float = 30.0
    tank_stage_map: dict = field(
        default_factory=lambda: {"planning": "limnology", "tool": "limnology",
                                 "report": "limnology"}
    )
    tool_endpoints: dict = field(default_factory=dict)
    data_dir: str = "naiad-data"
    bloom_thresholds: tuple = DEFAULT_BLOOM_THRESHOLDS
    chl_coefficients: tuple = DEFAULT_CHL_COEFFICIENTS

    def validate(self) -> None:
        for name in ("provider_url", "embedding_url"):
            value = getattr(self, name)
            parsed = urlparse(value)
            if parsed.scheme not in ("http", "https") or not parsed.netloc:
                raise ConfigInvalid(f"{name}: '{value}' is not a well-formed URL")
        for name, url in self.tool_endpoints.items():
            parsed = urlparse(url)
            if parsed.scheme not in ("http", "https") or not parsed.netloc:
                raise ConfigInvalid(f"tool_endpoints[{name}]: '{url}' is not a well-formed URL")
        for name in ("workers", "retry_default", "retry_delay", "remote_timeout"):
            if getattr(self, name) is None or getattr(self, name) < 0 or \
                    (name == "workers" and self.workers < 1):
                raise ConfigInvalid(f"{name}: must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigInvalid(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**data)
        if isinstance(cfg.bloom_thresholds, list):
            cfg.bloom_thresholds = tuple(cfg.bloom_thresholds)
        if isinstance(cfg.chl_coefficients, list):
            cfg.chl_coefficients = tuple(cfg.chl_coefficients)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path | None = None) -> "EngineConfig":
        """Read the JSON config file, then apply environment overrides."""
        path = path or os.environ.get(ENV_PREFIX + "CONFIG")
        data = {}
        if path:
            try:
                data = json.loads(Path(path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigInvalid(f"cannot read config '{path}': {exc}") from exc
        if ENV_PREFIX + "DATA_DIR" in os.environ:
            data["data_dir"] = os.environ[ENV_PREFIX + "DATA_DIR"]
        if ENV_PREFIX + "PROVIDER_URL" in os.environ:
            data["provider_url"] = os.environ[ENV_PREFIX + "PROVIDER_URL"]
        return cls.from_dict(data)
