"""
Centralized configuration loader.

- Process settings come from environment variables (via python-dotenv if a
  .env is present) and are exposed through a cached `get_settings()`.
- Run configurations are single JSON documents validated into `RunConfig`;
  every problem found is reported at once, before any computation starts.
"""

import json
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from errors import ConfigError
from schemas import RunConfig


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)

    LOG_LEVEL: str = Field(default="INFO")
    # Root for run outputs and cached artifacts
    GCE_OUTPUT_ROOT: Path = Field(default=Path("runs"))
    GCE_JOBS: int = Field(default=1, ge=1, le=64)


def _build_settings_from_env() -> Settings:
    # Load .env if present (no-op if not)
    load_dotenv(override=False)
    try:
        return Settings(
            LOG_LEVEL=os.getenv("LOG_LEVEL", "INFO"),
            GCE_OUTPUT_ROOT=Path(os.getenv("GCE_OUTPUT_ROOT", "runs")),
            GCE_JOBS=int(os.getenv("GCE_JOBS", "1")),
        )
    except (ValidationError, ValueError) as exc:
        raise ConfigError([f"environment: {exc}"]) from exc


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Get a cached Settings instance."""
    return _build_settings_from_env()


def _format_validation_error(exc: ValidationError) -> List[str]:
    problems = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err.get("loc", ()))
        problems.append(f"{loc or '<root>'}: {err.get('msg')}")
    return problems


def load_run_config(path: Path, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Read and validate a run configuration.

    `overrides` maps dotted keys (e.g. "glance.s") to replacement values; they
    are applied to the raw document before validation so flags can only touch
    keys the config already defines.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"])
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc})"]) from exc

    problems: List[str] = []
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        cur = raw
        *parents, leaf = dotted.split(".")
        for key in parents:
            cur = cur.setdefault(key, {})
        cur[leaf] = value

    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_validation_error(exc)) from exc

    # Dataset paths are resolved against the config file's directory.
    data_path = config.dataset.path
    if not data_path.is_absolute():
        data_path = (path.parent / data_path).resolve()
        config = config.model_copy(
            update={"dataset": config.dataset.model_copy(update={"path": data_path})}
        )
    if not data_path.exists():
        problems.append(f"dataset.path: file not found: {data_path}")
    if problems:
        raise ConfigError(problems)
    return config


def resolve_output_dir(config: RunConfig, override: Optional[Path] = None) -> Path:
    """Relative output directories live under GCE_OUTPUT_ROOT."""
    out = Path(override) if override else config.output_dir
    if out is None:
        out = Path(config.name)
    if not out.is_absolute():
        out = get_settings().GCE_OUTPUT_ROOT / out
    return out
