"""Row schemas for the CSV tables of a regular-graph MaxCut dataset."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Tuple

from framework.experiment import BASELINE_COLUMNS, FEATURE_COLUMNS, LABEL_COLUMNS, RUN_COLUMNS

RATIO_SLACK = 1e-3

TABLES: Dict[str, list] = {
    "baselines.csv": BASELINE_COLUMNS,
    "features.csv": FEATURE_COLUMNS,
    "runs.csv": RUN_COLUMNS,
    "labels.csv": LABEL_COLUMNS,
}


@dataclass
class RunRow:
    """One optimized (instance, depth) cell of runs.csv."""

    instance_id: str
    p: int
    ratio: float
    gw_ratio: float
    seed: int
    num_gammas: int
    num_betas: int

    @staticmethod
    def from_dict(obj: Dict[str, Any]) -> "RunRow":
        ok, msg = validate_run_dict(obj)
        if not ok:
            raise ValueError(f"invalid runs.csv row: {msg}")
        return RunRow(
            instance_id=str(obj["instance_id"]),
            p=int(obj["p"]),
            ratio=float(obj["ratio"]),
            gw_ratio=float(obj["gw_ratio"]),
            seed=int(obj["seed"]),
            num_gammas=len(str(obj["gammas"]).split(";")),
            num_betas=len(str(obj["betas"]).split(";")),
        )


def _ratio_ok(value: Any) -> bool:
    try:
        x = float(value)
    except (TypeError, ValueError):
        return False
    return 0.0 <= x <= 1.0 + RATIO_SLACK


def validate_run_dict(obj: Dict[str, Any]) -> Tuple[bool, str]:
    """(ok, message) for a runs.csv row: ratio ranges, the seed and p angles of each kind."""
    for key in RUN_COLUMNS:
        if key not in obj:
            return False, f"missing column: {key}"
    try:
        p = int(obj["p"])
    except (TypeError, ValueError):
        return False, "p must be an integer"
    if p < 1:
        return False, "p must be >= 1"
    if not _ratio_ok(obj["ratio"]) or not _ratio_ok(obj["gw_ratio"]):
        return False, "ratios must lie in [0, 1.001]"
    try:
        seed = int(obj["seed"])
    except (TypeError, ValueError):
        return False, "seed must be an integer"
    if seed < 0:
        return False, "seed must be non-negative"
    if len(str(obj["gammas"]).split(";")) != p or len(str(obj["betas"]).split(";")) != p:
        return False, f"expected {p} gammas and {p} betas"
    return True, "ok"


def validate_baseline_dict(obj: Dict[str, Any]) -> Tuple[bool, str]:
    for key in BASELINE_COLUMNS:
        if key not in obj:
            return False, f"missing column: {key}"
    try:
        c_max, c_rlx = float(obj["c_max"]), float(obj["c_rlx"])
        expected = float(obj["gw_expected_cost"])
    except (TypeError, ValueError):
        return False, "costs must be numbers"
    if c_max <= 0:
        return False, "c_max must be positive"
    if c_rlx < c_max - 1e-6:
        return False, "relaxed cost is below the exact optimum"
    if expected > c_max + 1e-9:
        return False, "GW expected cost exceeds the exact optimum"
    if len(str(obj["max_cut_assignment"])) != int(obj["n"]):
        return False, "assignment length differs from n"
    return True, "ok"
