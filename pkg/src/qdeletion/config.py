"""Configuration file discovery and loading using the XDG Base Directory specification.

Settings are layered, lowest priority first:
1. System-wide: /etc/xdg/qdeletion/config.yaml (or XDG_CONFIG_DIRS)
2. User-level: ~/.config/qdeletion/config.yaml (or XDG_CONFIG_HOME)
3. An explicit file passed with ``--config``
4. Environment variables (QDELETION_PRECISION, QDELETION_FORMAT, QDELETION_SAMPLES)
5. Command-line flags
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from pydantic import ValidationError

from .linalg import Tolerances
from .sweep import OutputFormat
from .verification import DEFAULT_SAMPLES, DEFAULT_SEED

logger = logging.getLogger(__name__)

ENV_PRECISION = "QDELETION_PRECISION"
ENV_FORMAT = "QDELETION_FORMAT"
ENV_SAMPLES = "QDELETION_SAMPLES"

_KNOWN_KEYS = {"precision", "format", "samples", "seed", "tolerances"}


class ConfigError(Exception):
    """Raised when configuration loading fails."""


@dataclass
class QdeletionConfig:
    """Merged configuration from all sources."""

    precision: int = 4
    output_format: OutputFormat = OutputFormat.CSV
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    tolerances: Tolerances = field(default_factory=Tolerances)
    sources: List[Path] = field(default_factory=list)


def get_config_dirs() -> List[Path]:
    """Return config directories in search order (lowest to highest priority)."""

    dirs: List[Path] = []

    xdg_config_dirs = os.environ.get("XDG_CONFIG_DIRS", "/etc/xdg")
    for dir_str in xdg_config_dirs.split(":"):
        if dir_str:
            dirs.append(Path(dir_str) / "qdeletion")

    xdg_config_home = os.environ.get("XDG_CONFIG_HOME")
    if xdg_config_home:
        dirs.append(Path(xdg_config_home) / "qdeletion")
    else:
        dirs.append(Path.home() / ".config" / "qdeletion")

    return dirs


def _load_yaml_file(path: Path) -> Dict[str, Any]:
    """Load and parse a YAML config file; an empty file is an empty mapping."""
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigError(f"Failed to parse {path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"Failed to read {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must contain a YAML mapping")
    return data


def _merge_configs(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Deep merge two config dictionaries, with override taking precedence."""
    result = base.copy()

    for key, value in override.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = _merge_configs(result[key], value)
        else:
            result[key] = value

    return result


def _as_int(value: Any, key: str, *, low: int, high: Optional[int] = None) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"'{key}' must be an integer, got {value!r}")
    try:
        number = int(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"'{key}' must be an integer, got {value!r}") from exc
    if isinstance(value, float) and value != number:
        raise ConfigError(f"'{key}' must be an integer, got {value!r}")
    if number < low or (high is not None and number > high):
        bound = f"[{low}, {high}]" if high is not None else f">= {low}"
        raise ConfigError(f"'{key}' must be {bound}, got {number}")
    return number


def _as_format(value: Any, key: str) -> OutputFormat:
    try:
        return OutputFormat(str(value).lower())
    except ValueError as exc:
        choices = ", ".join(item.value for item in OutputFormat)
        raise ConfigError(f"'{key}' must be one of {choices}, got {value!r}") from exc


def _as_tolerances(value: Any) -> Tolerances:
    if not isinstance(value, dict):
        raise ConfigError("'tolerances' must be a mapping")
    try:
        return Tolerances(**value)
    except ValidationError as exc:
        error = exc.errors()[0]
        location = ".".join(str(part) for part in error["loc"])
        raise ConfigError(f"'tolerances.{location}': {error['msg']}") from exc


def _build(data: Dict[str, Any], sources: List[Path]) -> QdeletionConfig:
    unknown = sorted(set(data) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")

    config = QdeletionConfig(sources=sources)
    if "precision" in data:
        config.precision = _as_int(data["precision"], "precision", low=1, high=15)
    if "format" in data:
        config.output_format = _as_format(data["format"], "format")
    if "samples" in data:
        config.samples = _as_int(data["samples"], "samples", low=2)
    if "seed" in data:
        config.seed = _as_int(data["seed"], "seed", low=0)
    if "tolerances" in data:
        config.tolerances = _as_tolerances(data["tolerances"])

    if ENV_PRECISION in os.environ:
        config.precision = _as_int(os.environ[ENV_PRECISION], ENV_PRECISION, low=1, high=15)
    if ENV_FORMAT in os.environ:
        config.output_format = _as_format(os.environ[ENV_FORMAT], ENV_FORMAT)
    if ENV_SAMPLES in os.environ:
        config.samples = _as_int(os.environ[ENV_SAMPLES], ENV_SAMPLES, low=2)
    return config


def load_config(explicit: Optional[Path] = None) -> QdeletionConfig:
    """Load configuration from the XDG directories, then ``explicit``, then the environment.

    Invalid discovered files are skipped with a warning; an explicit file must exist and
    parse, otherwise :class:`ConfigError` is raised.
    """

    merged_data: Dict[str, Any] = {}
    sources: List[Path] = []

    for config_dir in get_config_dirs():
        config_file = config_dir / "config.yaml"
        if config_file.exists():
            try:
                file_data = _load_yaml_file(config_file)
            except ConfigError as exc:
                logger.warning("Skipping invalid config: %s", exc)
                continue
            merged_data = _merge_configs(merged_data, file_data)
            sources.append(config_file)

    if explicit is not None:
        if not explicit.is_file():
            raise ConfigError(f"Config file {explicit} does not exist")
        merged_data = _merge_configs(merged_data, _load_yaml_file(explicit))
        sources.append(explicit)

    logger.debug("config sources: %s", [str(path) for path in sources])
    return _build(merged_data, sources)
