"""Descriptive statistics for ratio tables.

Functions here are intentionally simple and transparent, favouring
reproducibility and auditability over raw performance.
"""

from __future__ import annotations

from typing import Callable, Dict, Iterable, List, Sequence

import numpy as np


def _as_array(values: Iterable[float]) -> np.ndarray:
    xs = np.asarray([float(v) for v in values], dtype=float)
    if xs.size == 0:
        raise ValueError("values must be a non-empty sequence")
    return xs


def describe(values: Sequence[float]) -> Dict[str, float]:
    """Min, quartiles (linear interpolation), max, mean and count.

    Returns
    -------
    dict
        {"n", "min", "q1", "median", "q3", "max", "mean"}
    """
    xs = _as_array(values)
    q1, median, q3 = np.percentile(xs, [25.0, 50.0, 75.0])
    return {
        "n": int(xs.size),
        "min": float(xs.min()),
        "q1": float(q1),
        "median": float(median),
        "q3": float(q3),
        "max": float(xs.max()),
        "mean": float(xs.mean()),
    }


def boxplot_whiskers(values: Sequence[float], whis: float = 1.5) -> Dict[str, float]:
    """Tukey whiskers: furthest data points within `whis` IQR of the box."""
    xs = _as_array(values)
    q1, q3 = np.percentile(xs, [25.0, 75.0])
    iqr = q3 - q1
    inside = xs[(xs >= q1 - whis * iqr) & (xs <= q3 + whis * iqr)]
    return {
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "n_outliers": int(xs.size - inside.size),
    }


def bootstrap_ci(
    values: Sequence[float],
    metric_fn: Callable[[np.ndarray], float] = np.median,
    n_boot: int = 2000,
    seed: int = 42,
    ci: float = 0.95,
) -> dict:
    """Simple percentile bootstrap confidence interval.

    Parameters
    ----------
    values:
        1D list/sequence of scalar values.
    metric_fn:
        Maps an array of values to a scalar (default: median). Applied to
        the original values for the point estimate and to each resample.
    n_boot:
        Number of bootstrap resamples (default 2000).
    seed:
        Random seed for resampling; fixes reproducibility.
    ci:
        Confidence level in (0,1), e.g. 0.95.

    Returns
    -------
    dict
        {"point", "ci_low", "ci_high", "n", "n_boot", "seed", "ci"}
    """
    xs = _as_array(values)
    if not (0.0 < ci < 1.0):
        raise ValueError(f"ci must be in (0,1), got {ci}")
    if n_boot <= 0:
        raise ValueError(f"n_boot must be > 0, got {n_boot}")

    rng = np.random.default_rng(seed)
    n = xs.size
    point = float(metric_fn(xs))

    idx = rng.integers(0, n, size=(n_boot, n))
    boot_stats: List[float] = sorted(float(metric_fn(xs[row])) for row in idx)

    alpha = (1.0 - ci) / 2.0
    low_idx = max(0, int(alpha * n_boot))
    high_idx = min(n_boot - 1, int((1.0 - alpha) * n_boot) - 1)

    return {
        "point": point,
        "ci_low": boot_stats[low_idx],
        "ci_high": boot_stats[high_idx],
        "n": int(n),
        "n_boot": n_boot,
        "seed": seed,
        "ci": ci,
    }
