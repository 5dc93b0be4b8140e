"""Exception hierarchy shared by the library, the orchestrator and the CLI.

Validation problems map to exit code 1, numerical or search failures to 2.
"""

from __future__ import annotations


class MaxCutSelectError(Exception):
    """Base class; `exit_code` is what the CLI returns for it."""

    exit_code = 1


class ValidationError(MaxCutSelectError, ValueError):
    """Bad parameters, malformed inputs or files."""

    exit_code = 1


class SizeError(ValidationError):
    """Instance exceeds a size guard (brute force, simulator, set numbers)."""


class FitError(ValidationError):
    """Training data cannot be fitted by the requested pipeline."""


class StratificationError(ValidationError):
    """A class has fewer members than the number of folds."""


class GapError(ValidationError):
    """A requested depth is missing from a dataset directory."""


class NumericalError(MaxCutSelectError, RuntimeError):
    """Eigensolver, factorization or optimizer failure."""

    exit_code = 2

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class GenerationError(NumericalError):
    """Random graph generation ran out of restarts."""


class FeatureError(NumericalError):
    """A feature is undefined for the instance (instance rejected)."""


class SearchBudgetError(FeatureError):
    """Exhaustive search exceeded its step budget."""


__all__ = [
    "MaxCutSelectError",
    "ValidationError",
    "SizeError",
    "FitError",
    "StratificationError",
    "GapError",
    "NumericalError",
    "GenerationError",
    "SearchBudgetError",
    "FeatureError",
]
