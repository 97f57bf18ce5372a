"""Service configuration: one file, documented env-var overrides.

YAML or JSON, selected by extension. Every field can be overridden with
a ``DFDETECT_``-prefixed environment variable (upper-cased field name);
list-valued fields take comma-separated values.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .errors import ConfigError
from .types import PipelineConfig

ENV_PREFIX = "DFDETECT_"

DEFAULT_CACHE_TTL_SECONDS = 7 * 24 * 3600.0


@dataclass(frozen=True)
class ServiceConfig:
    storage_root: str = "./dfdetect-data"
    host: str = "127.0.0.1"
    port: int = 8080
    tokens: tuple[str, ...] = ()  # empty disables the credential gate (dev mode)
    proxy: Optional[str] = None
    workers: int = 2
    shot_workers: int = 4
    max_pending_jobs: int = 64
    cache_ttl_seconds: float = DEFAULT_CACHE_TTL_SECONDS
    max_download_bytes: int = 512 * 1024 * 1024
    backends: tuple[str, ...] = ("constant:0.5",)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def __post_init__(self) -> None:
        if self.workers < 1 or self.shot_workers < 1:
            raise ConfigError("field workers/shot_workers: must be >= 1")
        if self.max_pending_jobs < 1:
            raise ConfigError("field max_pending_jobs: must be >= 1")
        if self.cache_ttl_seconds <= 0:
            raise ConfigError("field cache_ttl_seconds: must be positive")
        if self.max_download_bytes <= 0:
            raise ConfigError("field max_download_bytes: must be positive")
        if not self.backends:
            raise ConfigError("field backends: at least one scorer backend required")


_LIST_FIELDS = {"tokens", "backends"}
_INT_FIELDS = {"port", "workers", "shot_workers", "max_pending_jobs", "max_download_bytes"}
_FLOAT_FIELDS = {"cache_ttl_seconds"}


def _coerce(name: str, value, where: str):
    try:
        if name in _LIST_FIELDS:
            if isinstance(value, str):
                return tuple(v.strip() for v in value.split(",") if v.strip())
            return tuple(str(v) for v in value)
        if name in _INT_FIELDS:
            return int(value)
        if name in _FLOAT_FIELDS:
            return float(value)
        if name == "proxy":
            return None if value in (None, "") else str(value)
        return value
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: field {name}: {exc}") from exc


def load_config(path: Optional[str] = None,
                env: Optional[dict[str, str]] = None) -> ServiceConfig:
    """Load config from a file (if given) and apply env overrides."""
    env = os.environ if env is None else env
    raw: dict = {}
    where = path or "<defaults>"
    if path is not None:
        text = Path(path).read_text()
        try:
            if path.endswith((".yaml", ".yml")):
                raw = yaml.safe_load(text) or {}
            else:
                raw = json.loads(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = f" (line {mark.line + 1})" if mark else ""
            raise ConfigError(f"{path}{line}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} (line {exc.lineno}): {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")

    known = {f.name for f in dataclasses.fields(ServiceConfig)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{where}: unknown field {key!r}")

    kwargs = {}
    for name in known:
        if name == "pipeline":
            continue
        if name in raw:
            kwargs[name] = _coerce(name, raw[name], where)
        env_key = ENV_PREFIX + name.upper()
        if env_key in env:
            kwargs[name] = _coerce(name, env[env_key], f"env {env_key}")

    pipeline_raw = raw.get("pipeline", {})
    if not isinstance(pipeline_raw, dict):
        raise ConfigError(f"{where}: field pipeline: must be a mapping")
    try:
        pipeline = PipelineConfig.from_json_obj({**PipelineConfig().to_json_obj(),
                                                 **pipeline_raw})
    except TypeError as exc:
        raise ConfigError(f"{where}: field pipeline: {exc}") from exc
    kwargs["pipeline"] = pipeline
    return ServiceConfig(**kwargs)
