"""Shared pytest setup: repo root on sys.path and the opt-in `slow` marker."""

import os
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale run, enabled with MAXCUT_SELECT_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("MAXCUT_SELECT_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="set MAXCUT_SELECT_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
