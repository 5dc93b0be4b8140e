"""Instance features for algorithm selection.

Three groups:
  (i)   spectral / density
  (ii)  combinatorial set numbers (exact, NP-hard, flagged expensive)
  (iii) statistics of the GW relaxation and its roundings
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence

import networkx as nx
import numpy as np

from core.errors import FeatureError, SearchBudgetError, SizeError, ValidationError

from .graph import Graph, SpectrumReport, spectrum as graph_spectrum
from .gw import GwStats, SdpSolution

SET_NUMBER_MAX_N = 24
SEARCH_BUDGET = 10**9
CLOSE1 = 0.1
CLOSE3 = 0.001
NUM_LAPLACIAN_EVS = 5


@dataclass
class FeatureVector:
    density: float
    log_norm_laplacian_ev1: float
    log_norm_laplacian_ev2: float
    log_norm_laplacian_ev3: float
    log_norm_laplacian_ev4: float
    log_norm_laplacian_ev5: float
    log_laplacian_ev_ratio: float
    spectral_gap: float
    independence_number_over_number_edges: float
    matching_number_over_number_edges: float
    diameter_over_number_edges: float
    domination_number_over_number_nodes: float
    zero_forcing_number_over_number_nodes: float
    power_domination_over_number_edges: float
    percent_cut: float
    percent_positive_lower_part_relaxation_solution: float
    percent_close1_lower_part_relaxation_solution: float
    percent_close3_lower_part_relaxation_solution: float
    expected_costGW_over_sdp_cost: float
    std_costGW_over_sdp_cost: float

    def __post_init__(self) -> None:
        bad = [f.name for f in fields(self) if not np.isfinite(getattr(self, f.name))]
        if bad:
            raise FeatureError(f"non-finite features: {', '.join(bad)}")

    def to_dict(self) -> Dict[str, float]:
        return {k: float(v) for k, v in asdict(self).items()}

    def as_array(self, names: Optional[Sequence[str]] = None) -> np.ndarray:
        d = asdict(self)
        return np.asarray([d[name] for name in (names or FEATURE_NAMES)], dtype=float)

    @classmethod
    def from_dict(cls, row: Dict[str, object]) -> "FeatureVector":
        missing = [n for n in FEATURE_NAMES if n not in row or row[n] in ("", None)]
        if missing:
            raise ValidationError(f"feature row is missing: {', '.join(missing)}")
        return cls(**{n: float(row[n]) for n in FEATURE_NAMES})


FEATURE_NAMES: List[str] = [f.name for f in fields(FeatureVector)]

SPECTRAL = FEATURE_NAMES[:8]
SET_NUMBERS = FEATURE_NAMES[8:14]
GW_DERIVED = FEATURE_NAMES[14:]

FEATURE_GROUPS: Dict[str, List[str]] = {"i": SPECTRAL, "ii": SET_NUMBERS, "iii": GW_DERIVED}
EXPENSIVE = frozenset(SET_NUMBERS)

FEATURE_SETS: Dict[str, List[str]] = {
    "gw2": ["expected_costGW_over_sdp_cost", "std_costGW_over_sdp_cost"],
    "efficient": list(SPECTRAL),
    "cheap": list(SPECTRAL) + list(GW_DERIVED),
    "all": list(FEATURE_NAMES),
}

_NORMALIZATION = {
    "independence_number_over_number_edges": "num_edges",
    "matching_number_over_number_edges": "num_edges",
    "diameter_over_number_edges": "num_edges",
    "domination_number_over_number_nodes": "num_nodes",
    "zero_forcing_number_over_number_nodes": "num_nodes",
    # named "over_number_edges" though sometimes described per node; the name wins
    "power_domination_over_number_edges": "num_edges",
    "percent_cut": "num_edges",
    "log_norm_laplacian_ev1": "max_degree",
    "log_norm_laplacian_ev2": "max_degree",
    "log_norm_laplacian_ev3": "max_degree",
    "log_norm_laplacian_ev4": "max_degree",
    "log_norm_laplacian_ev5": "max_degree",
    "expected_costGW_over_sdp_cost": "sdp_cost",
    "std_costGW_over_sdp_cost": "sdp_cost",
}


def _group_of(name: str) -> str:
    return next(g for g, names in FEATURE_GROUPS.items() if name in names)


FEATURE_SCHEMA: List[Dict[str, object]] = [
    {
        "name": name,
        "group": _group_of(name),
        "expensive": name in EXPENSIVE,
        "normalization": _NORMALIZATION.get(name, "none"),
    }
    for name in FEATURE_NAMES
]


def resolve_feature_set(spec: str | Sequence[str]) -> List[str]:
    """A named set ('gw2', 'efficient', 'cheap', 'all') or an explicit list of names."""
    if isinstance(spec, str):
        if spec in FEATURE_SETS:
            return list(FEATURE_SETS[spec])
        names = [s.strip() for s in spec.split(",") if s.strip()]
    else:
        names = list(spec)
    unknown = [n for n in names if n not in FEATURE_NAMES]
    if unknown or not names:
        raise ValidationError(f"unknown feature set or names: {spec!r}")
    return names


# group (i)


def log_norm_laplacian_ev(eigenvalues: np.ndarray, degree: float, k: int) -> float:
    """ln(lambda_k / degree) for the k-th largest Laplacian eigenvalue (k from 1)."""
    lam = float(eigenvalues[k - 1])
    if lam <= 0 or degree <= 0:
        raise FeatureError(f"log of non-positive Laplacian eigenvalue lambda_{k}={lam!r}")
    return float(np.log(lam / degree))


def log_laplacian_ev_ratio(eigenvalues: np.ndarray) -> float:
    lam1, lam2 = float(eigenvalues[0]), float(eigenvalues[1])
    if lam1 <= 0 or lam2 <= 0:
        raise FeatureError(f"log ratio undefined for lambda_1={lam1!r}, lambda_2={lam2!r}")
    return float(np.log(lam1 / lam2))


def spectral_features(g: Graph, spec: Optional[SpectrumReport] = None) -> Dict[str, float]:
    """Density, log-normalized top-5 Laplacian eigenvalues, their top ratio and the spectral gap.

    Normalization uses the maximum degree (4 on the 4-regular instances).
    """
    if g.n < NUM_LAPLACIAN_EVS:
        raise FeatureError(f"need at least {NUM_LAPLACIAN_EVS} vertices for the spectral features, got {g.n}")
    spec = spec or graph_spectrum(g)
    eigs = np.asarray(spec.laplacian_eigenvalues, dtype=float)
    degree = float(g.degrees().max())
    out: Dict[str, float] = {"density": 2.0 * g.num_edges / (g.n * (g.n - 1))}
    for k in range(1, NUM_LAPLACIAN_EVS + 1):
        out[f"log_norm_laplacian_ev{k}"] = log_norm_laplacian_ev(eigs, degree, k)
    out["log_laplacian_ev_ratio"] = log_laplacian_ev_ratio(eigs)
    out["spectral_gap"] = spec.spectral_gap
    return out


# group (ii)


class _StepCounter:
    def __init__(self, budget: int):
        self.budget = budget
        self.steps = 0

    def tick(self, k: int = 1) -> None:
        self.steps += k
        if self.steps > self.budget:
            raise SearchBudgetError(f"exhaustive search exceeded {self.budget} closure steps")


def _neighbor_masks(g: Graph) -> List[int]:
    masks = [0] * g.n
    for i, j, _ in g.edges:
        masks[i] |= 1 << j
        masks[j] |= 1 << i
    return masks


def _zero_forcing_closure(filled: int, nbr: List[int], full: int, counter: _StepCounter) -> int:
    """Apply 'a filled vertex with exactly one unfilled neighbor fills it' until stable."""
    changed = True
    while changed and filled != full:
        changed = False
        counter.tick(len(nbr))
        for v, mask in enumerate(nbr):
            if not (filled >> v) & 1:
                continue
            unfilled = mask & ~filled
            if unfilled and unfilled & (unfilled - 1) == 0:
                filled |= unfilled
                changed = True
    return filled


def _smallest_set(n: int, start: int, accepts: Callable[[int], bool], counter: _StepCounter) -> int:
    for size in range(max(start, 1), n + 1):
        for subset in combinations(range(n), size):
            counter.tick()
            mask = 0
            for v in subset:
                mask |= 1 << v
            if accepts(mask):
                return size
    return n


def domination_number(g: Graph, budget: int = SEARCH_BUDGET) -> int:
    nbr = _neighbor_masks(g)
    closed = [m | (1 << v) for v, m in enumerate(nbr)]
    full = (1 << g.n) - 1
    counter = _StepCounter(budget)

    def dominates(mask: int) -> bool:
        covered = 0
        for v in range(g.n):
            if (mask >> v) & 1:
                covered |= closed[v]
        return covered == full

    # each vertex dominates at most max_degree + 1 vertices
    lower = -(-g.n // (int(g.degrees().max()) + 1))
    return _smallest_set(g.n, lower, dominates, counter)


def zero_forcing_number(g: Graph, budget: int = SEARCH_BUDGET) -> int:
    nbr = _neighbor_masks(g)
    full = (1 << g.n) - 1
    counter = _StepCounter(budget)
    # Z(G) >= minimum degree
    lower = int(g.degrees().min())
    return _smallest_set(g.n, lower, lambda m: _zero_forcing_closure(m, nbr, full, counter) == full, counter)


def power_domination_number(g: Graph, budget: int = SEARCH_BUDGET) -> int:
    nbr = _neighbor_masks(g)
    closed = [m | (1 << v) for v, m in enumerate(nbr)]
    full = (1 << g.n) - 1
    counter = _StepCounter(budget)

    def power_dominates(mask: int) -> bool:
        observed = 0
        for v in range(g.n):
            if (mask >> v) & 1:
                observed |= closed[v]
        return _zero_forcing_closure(observed, nbr, full, counter) == full

    return _smallest_set(g.n, 1, power_dominates, counter)


def independence_number(g: Graph) -> int:
    """Maximum independent set = maximum clique of the complement (branch and bound)."""
    _, size = nx.max_weight_clique(nx.complement(g.to_networkx()), weight=None)
    return int(size)


def matching_number(g: Graph) -> int:
    return len(nx.max_weight_matching(g.to_networkx(), maxcardinality=True, weight=None))


def diameter(g: Graph) -> int:
    nxg = g.to_networkx()
    if not nx.is_connected(nxg):
        raise FeatureError("diameter is undefined for a disconnected graph")
    return int(nx.diameter(nxg))


def set_numbers(g: Graph, budget: int = SEARCH_BUDGET) -> Dict[str, int]:
    """Raw (unnormalized) set numbers."""
    if g.n > SET_NUMBER_MAX_N:
        raise SizeError(f"exact set numbers refuse n={g.n} > {SET_NUMBER_MAX_N}")
    return {
        "independence": independence_number(g),
        "matching": matching_number(g),
        "diameter": diameter(g),
        "domination": domination_number(g, budget),
        "zero_forcing": zero_forcing_number(g, budget),
        "power_domination": power_domination_number(g, budget),
    }


def set_number_features(g: Graph, budget: int = SEARCH_BUDGET) -> Dict[str, float]:
    if g.num_edges == 0:
        raise FeatureError("set-number features need at least one edge")
    raw = set_numbers(g, budget)
    e, n = float(g.num_edges), float(g.n)
    return {
        "independence_number_over_number_edges": raw["independence"] / e,
        "matching_number_over_number_edges": raw["matching"] / e,
        "diameter_over_number_edges": raw["diameter"] / e,
        "domination_number_over_number_nodes": raw["domination"] / n,
        "zero_forcing_number_over_number_nodes": raw["zero_forcing"] / n,
        "power_domination_over_number_edges": raw["power_domination"] / e,
    }


# group (iii)


def gw_features(sol: SdpSolution, stats: GwStats, g: Optional[Graph] = None) -> Dict[str, float]:
    """Relaxation and rounding statistics; the Cholesky 'lower part' includes the diagonal."""
    g = g or sol.graph
    c_rlx = float(sol.relaxed_cost)
    if g.num_edges == 0 or c_rlx <= 0:
        raise FeatureError("GW features need a graph with edges and a positive relaxed cost")
    lower = sol.lower_entries()
    return {
        "percent_cut": c_rlx / g.num_edges,
        "percent_positive_lower_part_relaxation_solution": float(np.mean(lower > 0)),
        "percent_close1_lower_part_relaxation_solution": float(np.mean(np.abs(lower) < CLOSE1)),
        "percent_close3_lower_part_relaxation_solution": float(np.mean(np.abs(lower) < CLOSE3)),
        "expected_costGW_over_sdp_cost": stats.expected_cost / c_rlx,
        "std_costGW_over_sdp_cost": stats.std_cost / c_rlx,
    }


def compute_features(
    g: Graph,
    sol: SdpSolution,
    stats: GwStats,
    spec: Optional[SpectrumReport] = None,
    budget: int = SEARCH_BUDGET,
) -> FeatureVector:
    values: Dict[str, float] = {}
    values.update(spectral_features(g, spec))
    values.update(set_number_features(g, budget))
    values.update(gw_features(sol, stats, g))
    return FeatureVector(**values)
