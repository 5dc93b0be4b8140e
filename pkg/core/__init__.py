"""Core modules for reproducible experiments."""
from .seed import set_seed, derive_seed, make_rng
from .logging import DualLogger
from .repro import canonical_json, fingerprint, sha256_file, write_repro_manifest
from .io import load_json, save_json, write_csv, read_csv, read_provenance
from .stats import describe, boxplot_whiskers, bootstrap_ci
from .errors import (
    MaxCutSelectError,
    ValidationError,
    SizeError,
    FitError,
    StratificationError,
    GapError,
    NumericalError,
    GenerationError,
    SearchBudgetError,
    FeatureError,
)

__all__ = [
    "set_seed",
    "derive_seed",
    "make_rng",
    "DualLogger",
    "canonical_json",
    "fingerprint",
    "sha256_file",
    "write_repro_manifest",
    "load_json",
    "save_json",
    "write_csv",
    "read_csv",
    "read_provenance",
    "describe",
    "boxplot_whiskers",
    "bootstrap_ci",
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
