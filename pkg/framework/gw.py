"""Goemans-Williamson: SDP relaxation, hyperplane rounding, projection statistics.

The relaxation max sum w_ij (1 - v_i.v_j)/2 over unit vectors is solved by
block-coordinate ascent at rank n: each sweep sets
v_i <- -normalize(sum_j w_ij v_j) in vertex order, which never decreases
the objective.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from core.errors import NumericalError, ValidationError
from core.seed import derive_seed

from .graph import CutAssignment, Graph, maxcut_cost

SDP_TOL = 1e-8
SDP_MAX_ITERS = 10_000
CHOLESKY_JITTER = 1e-10
GW_PROJECTIONS = 1000

LogFn = Optional[Callable[[str], None]]


@dataclass
class SdpSolution:
    graph: Graph
    vectors: np.ndarray
    relaxed_cost: float
    gram: np.ndarray
    cholesky_lower: np.ndarray
    converged: bool
    sweeps: int
    jitter: float = 0.0

    def lower_entries(self) -> np.ndarray:
        """Lower triangle of the Cholesky factor, diagonal included (n(n+1)/2 values)."""
        rows, cols = np.tril_indices(self.graph.n)
        return self.cholesky_lower[rows, cols]


@dataclass
class GwStats:
    expected_cost: float
    std_cost: float
    best_cost: float
    m: int
    rng_seed: int
    relaxed_cost: float
    converged: bool = True


def _objective(vectors: np.ndarray, i: np.ndarray, j: np.ndarray, w: np.ndarray) -> float:
    dots = np.einsum("ij,ij->i", vectors[i], vectors[j])
    return float(np.sum(w * (1.0 - dots) / 2.0))


def _cholesky_with_jitter(gram: np.ndarray) -> Tuple[np.ndarray, float]:
    try:
        return np.linalg.cholesky(gram), 0.0
    except np.linalg.LinAlgError:
        pass
    jitter = CHOLESKY_JITTER
    eye = np.eye(gram.shape[0])
    while jitter <= 1e-6:
        try:
            return np.linalg.cholesky(gram + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NumericalError("Cholesky factorization of the SDP Gram matrix failed even with jitter")


def solve_sdp(
    g: Graph,
    tol: float = SDP_TOL,
    max_iters: int = SDP_MAX_ITERS,
    seed: int = 0,
    log_fn: LogFn = None,
) -> SdpSolution:
    """Block-coordinate ascent on the MaxCut SDP from seeded Gaussian unit vectors.

    Stops when the relative objective change between sweeps drops below
    `tol`; otherwise returns the last iterate flagged non-converged.
    """
    if not tol > 0:
        raise ValidationError(f"tol must be > 0, got {tol}")
    if max_iters < 1:
        raise ValidationError(f"max_iters must be >= 1, got {max_iters}")
    n = g.n
    rng = np.random.default_rng(seed)
    vectors = rng.standard_normal((n, n))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    weights = g.adjacency()
    ei, ej, ew = g.edge_arrays()

    prev = _objective(vectors, ei, ej, ew)
    converged = False
    sweeps = 0
    for sweeps in range(1, max_iters + 1):
        for v in range(n):
            field = weights[v] @ vectors
            norm = np.linalg.norm(field)
            if norm > 1e-14:
                vectors[v] = -field / norm
        current = _objective(vectors, ei, ej, ew)
        if current < prev - 1e-9 * max(1.0, abs(prev)):
            raise NumericalError(
                f"SDP ascent decreased the objective at sweep {sweeps}: {prev} -> {current}"
            )
        change = abs(current - prev) / max(abs(current), 1e-300)
        prev = current
        if change < tol:
            converged = True
            break
    if not converged and log_fn:
        log_fn(f"[gw] SDP not converged after {max_iters} sweeps (n={n}); using best-so-far")

    gram = vectors @ vectors.T
    lower, jitter = _cholesky_with_jitter(gram)
    relaxed = float(np.sum(ew * (1.0 - gram[ei, ej]) / 2.0))
    return SdpSolution(
        graph=g,
        vectors=vectors,
        relaxed_cost=relaxed,
        gram=gram,
        cholesky_lower=lower,
        converged=converged,
        sweeps=sweeps,
        jitter=jitter,
    )


def round_signs(vectors: np.ndarray, r: np.ndarray) -> np.ndarray:
    """sign(V r) with sign(0) := +1; r may hold several projections as columns."""
    return np.where(vectors @ r >= 0.0, 1, -1).astype(np.int64)


def random_projection(
    sol: SdpSolution,
    seed: Optional[int] = None,
    r: Optional[np.ndarray] = None,
) -> CutAssignment:
    """One hyperplane rounding; `r` overrides the Gaussian draw."""
    n = sol.graph.n
    if r is None:
        r = np.random.default_rng(seed).standard_normal(n)
    r = np.asarray(r, dtype=float)
    if r.shape != (n,):
        raise ValidationError(f"projection vector must have shape ({n},), got {r.shape}")
    z = round_signs(sol.vectors, r)
    return CutAssignment(z=z, cost=maxcut_cost(sol.graph, z))


def projection_costs(sol: SdpSolution, m: int, seed: int) -> np.ndarray:
    """Cut values of m independent hyperplane roundings drawn as one (n, m) block."""
    rng = np.random.default_rng(seed)
    r = rng.standard_normal((sol.graph.n, m))
    z = round_signs(sol.vectors, r)
    ei, ej, ew = sol.graph.edge_arrays()
    return (ew[:, None] * (1 - z[ei] * z[ej]) / 2.0).sum(axis=0)


def run_gw(
    g: Graph,
    m: int = GW_PROJECTIONS,
    seed: int = 0,
    tol: float = SDP_TOL,
    max_iters: int = SDP_MAX_ITERS,
    log_fn: LogFn = None,
) -> Tuple[SdpSolution, GwStats]:
    """Solve the SDP once, then estimate mean/std/best over m projections."""
    if m < 1:
        raise ValidationError(f"m must be >= 1, got {m}")
    sol = solve_sdp(g, tol=tol, max_iters=max_iters, seed=derive_seed(seed, 0), log_fn=log_fn)
    projection_seed = derive_seed(seed, 1)
    costs = projection_costs(sol, m, projection_seed)
    stats = GwStats(
        expected_cost=float(costs.mean()),
        std_cost=float(costs.std()),
        best_cost=float(costs.max()),
        m=m,
        rng_seed=seed,
        relaxed_cost=sol.relaxed_cost,
        converged=sol.converged,
    )
    return sol, stats


def estimate_gw(g: Graph, m: int = GW_PROJECTIONS, seed: int = 0, **kwargs) -> GwStats:
    return run_gw(g, m=m, seed=seed, **kwargs)[1]
