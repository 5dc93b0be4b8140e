#!/usr/bin/env python3
"""CLI wrapper: python scripts/maxcut_select.py <subcommand> [options]."""
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from framework.cli import main


if __name__ == "__main__":
    sys.exit(main())
