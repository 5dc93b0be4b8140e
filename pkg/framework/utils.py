"""Repo paths and YAML config loading shared by the CLI and scripts."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict
import sys

import yaml

from . import ROOT

if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core.errors import ValidationError  # type: ignore


CONFIGS_DIR = ROOT / "configs"
RUNS_DIR = ROOT / "runs"
DEFAULT_CONFIG_PATH = CONFIGS_DIR / "default.yaml"


def resolve(path: str | Path) -> Path:
    """Resolve a repo-relative or absolute path to an absolute Path."""
    p = Path(path)
    if p.is_absolute():
        return p
    return ROOT / p


def load_yaml(path: str | Path) -> Dict[str, Any]:
    """Load a YAML (or JSON) mapping; the root must be a dict."""
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"Config not found: {p}")
    try:
        data = yaml.safe_load(p.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ValidationError(f"Config is not valid YAML/JSON: {p}: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValidationError(f"Config root must be a mapping: {p}")
    return data


def load_default_config() -> Dict[str, Any]:
    """configs/default.yaml, or an empty mapping when it is absent."""
    if not DEFAULT_CONFIG_PATH.exists():
        return {}
    return load_yaml(DEFAULT_CONFIG_PATH)


__all__ = [
    "ROOT",
    "CONFIGS_DIR",
    "RUNS_DIR",
    "DEFAULT_CONFIG_PATH",
    "resolve",
    "load_yaml",
    "load_default_config",
]
