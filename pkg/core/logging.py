"""Dual logging: console + <run_dir>/run.log."""
import sys
from pathlib import Path
from typing import Optional


class DualLogger:
    """Log to both console and a file.

    With `run_dir=None` only the console is used; `quiet` silences the
    console while the file still receives every line.
    """

    def __init__(self, run_dir: Optional[Path], log_name: str = "run.log", quiet: bool = False):
        self.quiet = quiet
        self.log_path: Optional[Path] = None
        self._file = None
        if run_dir is not None:
            self.log_path = Path(run_dir) / log_name
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            self._file = open(self.log_path, "a", encoding="utf-8", buffering=1)

    def log(self, msg: str) -> None:
        line = msg if msg.endswith("\n") else msg + "\n"
        if not self.quiet:
            sys.stderr.write(line)
            sys.stderr.flush()
        if self._file is not None:
            self._file.write(line)
            self._file.flush()

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def __enter__(self) -> "DualLogger":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
