"""Run configuration: one YAML file with nested sections, plus repeatable
key=value overrides from the command line.

Secrets never live in the file; HTTP backends name an environment variable
that holds the API key.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Sequence

import yaml

from elderaug.errors import ConfigError


def load_run_config(path: Path | str, overrides: Sequence[str] = ()) -> dict:
    """Load a YAML config and apply dotted-path overrides (they win)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise ConfigError(f"{where}: cannot parse config: {exc}") from exc
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    for item in overrides:
        apply_override(cfg, item)
    return cfg


def apply_override(cfg: dict, item: str) -> None:
    """Set a nested key from a "section.key=value" string; values are parsed
    as YAML scalars so numbers and booleans come through typed."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like key.path=value")
    dotted, raw_value = item.split("=", 1)
    keys = [k for k in dotted.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"override {item!r} has an empty key path")
    try:
        value = yaml.safe_load(raw_value)
    except yaml.YAMLError:
        value = raw_value
    node = cfg
    for key in keys[:-1]:
        nxt = node.get(key)
        if not isinstance(nxt, dict):
            nxt = {}
            node[key] = nxt
        node = nxt
    node[keys[-1]] = value


def cfg_get(cfg: dict, dotted: str, default: Any = None) -> Any:
    node: Any = cfg
    for key in dotted.split("."):
        if not isinstance(node, dict) or key not in node:
            return default
        node = node[key]
    return node


def cfg_require(cfg: dict, dotted: str) -> Any:
    value = cfg_get(cfg, dotted, default=None)
    if value is None:
        raise ConfigError(f"config is missing required key {dotted!r}")
    return value
