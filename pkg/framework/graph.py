"""Graph representation, random regular instances, exact MaxCut and spectra.

Conventions
-----------
- Edges are (i, j, w) with i < j, kept sorted so serialization is stable.
- A computational-basis index encodes a sign vector: bit i set <=> z_i = -1.
  The brute-force oracle and the QAOA simulator share this convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from core.errors import GenerationError, NumericalError, SizeError, ValidationError

BRUTE_FORCE_MAX_N = 30
BRUTE_FORCE_CHUNK = 1 << 20
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
MAX_RESTARTS = 10_000

Edge = Tuple[int, int, float]


@dataclass(frozen=True)
class Graph:
    """Undirected simple weighted graph on vertices 0..n-1."""

    n: int
    edges: Tuple[Edge, ...]
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if int(self.n) < 2:
            raise ValidationError(f"graph needs n >= 2, got {self.n}")
        canon: Dict[Tuple[int, int], float] = {}
        for edge in self.edges:
            if len(edge) != 3:
                raise ValidationError(f"edge must be (i, j, w), got {edge!r}")
            i, j, w = int(edge[0]), int(edge[1]), float(edge[2])
            if i == j:
                raise ValidationError(f"self-loop at vertex {i}")
            if i > j:
                i, j = j, i
            if i < 0 or j >= self.n:
                raise ValidationError(f"edge ({i}, {j}) out of range for n={self.n}")
            if (i, j) in canon:
                raise ValidationError(f"duplicate edge ({i}, {j})")
            if not np.isfinite(w):
                raise ValidationError(f"edge ({i}, {j}) has non-finite weight")
            canon[(i, j)] = w
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", tuple((i, j, canon[(i, j)]) for i, j in sorted(canon)))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence], seed: Optional[int] = None) -> "Graph":
        """Build from (i, j) or (i, j, w) tuples; missing weights default to 1.0."""
        full = [(e[0], e[1], e[2] if len(e) > 2 else 1.0) for e in edges]
        return cls(n, tuple(full), seed)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.edges:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty.copy(), np.zeros(0)
        i, j, w = zip(*self.edges)
        return np.asarray(i, dtype=np.int64), np.asarray(j, dtype=np.int64), np.asarray(w, dtype=float)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        i, j, w = self.edge_arrays()
        a[i, j] = w
        a[j, i] = w
        return a

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def laplacian(self) -> np.ndarray:
        a = self.adjacency()
        return np.diag(a.sum(axis=1)) - a

    def neighbors(self) -> List[List[int]]:
        nbrs: List[List[int]] = [[] for _ in range(self.n)]
        for i, j, _ in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return nbrs

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_weighted_edges_from(self.edges)
        return g

    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    def relabel(self, permutation: Sequence[int]) -> "Graph":
        """Isomorphic copy with vertex v renamed to permutation[v]."""
        perm = [int(v) for v in permutation]
        if sorted(perm) != list(range(self.n)):
            raise ValidationError("relabel needs a permutation of 0..n-1")
        return Graph(self.n, tuple((perm[i], perm[j], w) for i, j, w in self.edges), self.seed)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"n": self.n, "edges": [[i, j, w] for i, j, w in self.edges]}
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    @classmethod
    def from_dict(cls, obj: Dict[str, Any]) -> "Graph":
        if not isinstance(obj, dict) or "n" not in obj or "edges" not in obj:
            raise ValidationError("graph JSON needs 'n' and 'edges'")
        if not isinstance(obj["edges"], list):
            raise ValidationError("graph 'edges' must be a list")
        seed = obj.get("seed")
        return cls.from_edges(int(obj["n"]), obj["edges"], None if seed is None else int(seed))


@dataclass
class CutAssignment:
    """Sign vector z in {-1, +1}^n and its cut value."""

    z: np.ndarray
    cost: float

    def as_bits(self) -> str:
        """'0' for z_i = +1, '1' for z_i = -1, vertex 0 first."""
        return "".join("0" if v > 0 else "1" for v in self.z)


@dataclass
class SpectrumReport:
    laplacian_eigenvalues: np.ndarray
    adjacency_eigenvalues: np.ndarray
    sweeps: Dict[str, int] = field(default_factory=dict)

    @property
    def spectral_gap(self) -> float:
        """Second smallest Laplacian eigenvalue."""
        return float(self.laplacian_eigenvalues[-2])


def generate_regular(
    n: int,
    degree: int,
    seed: int,
    require_connected: bool = True,
    max_restarts: int = MAX_RESTARTS,
) -> Graph:
    """Random simple `degree`-regular graph by the pairing model.

    Stubs are shuffled and paired; any loop, multi-edge (or, with
    `require_connected`, a disconnected result) restarts from scratch.
    """
    if n < 2 or degree < 1:
        raise ValidationError(f"need n >= 2 and degree >= 1, got n={n}, degree={degree}")
    if (n * degree) % 2 != 0:
        raise ValidationError(f"n*degree must be even, got {n}*{degree}={n * degree}")
    if degree >= n:
        raise ValidationError(f"degree must be < n, got degree={degree}, n={n}")

    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), degree)
    for _ in range(max_restarts + 1):
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        lo = pairs.min(axis=1)
        hi = pairs.max(axis=1)
        if np.any(lo == hi):
            continue
        keys = lo * n + hi
        if np.unique(keys).size != keys.size:
            continue
        g = Graph.from_edges(n, zip(lo.tolist(), hi.tolist()), seed=seed)
        if require_connected and not g.is_connected():
            continue
        return g
    raise GenerationError(
        f"pairing model exceeded {max_restarts} restarts for n={n}, degree={degree}, seed={seed}"
    )


def interleaved_seeds(count: int) -> List[int]:
    """Instance seeds i*10 and (i+1)*11, interleaved."""
    seeds: List[int] = []
    i = 0
    while len(seeds) < count:
        seeds.append(i * 10)
        if len(seeds) < count:
            seeds.append((i + 1) * 11)
        i += 1
    return seeds


def _as_sign_vector(g: Graph, z: Sequence[int]) -> np.ndarray:
    arr = np.asarray(z)
    if arr.ndim != 1 or arr.shape[0] != g.n:
        raise ValidationError(f"z must have length {g.n}, got shape {arr.shape}")
    if not np.all((arr == 1) | (arr == -1)):
        raise ValidationError("z entries must be -1 or +1")
    return arr.astype(np.int64)


def maxcut_cost(g: Graph, z: Sequence[int]) -> float:
    """Sum over edges of w_ij (1 - z_i z_j) / 2."""
    zz = _as_sign_vector(g, z)
    i, j, w = g.edge_arrays()
    return float(np.sum(w * (1 - zz[i] * zz[j]) / 2.0))


def basis_costs(g: Graph, indices: np.ndarray) -> np.ndarray:
    """C(z) for every basis index in `indices` (bit i set <=> z_i = -1)."""
    idx = np.asarray(indices, dtype=np.int64)
    costs = np.zeros(idx.shape, dtype=float)
    for i, j, w in g.edges:
        cut = ((idx >> i) ^ (idx >> j)) & 1
        costs += w * cut
    return costs


def index_to_signs(index: int, n: int) -> np.ndarray:
    return np.array([-1 if (index >> i) & 1 else 1 for i in range(n)], dtype=np.int64)


def brute_force_max(g: Graph, max_n: int = BRUTE_FORCE_MAX_N) -> CutAssignment:
    """Exact MaxCut over 2^(n-1) sign patterns with z_0 = +1 fixed."""
    if g.n > max_n:
        raise SizeError(f"brute force refuses n={g.n} > {max_n}")
    total = 1 << (g.n - 1)
    best_cost = -np.inf
    best_index = 0
    for start in range(0, total, BRUTE_FORCE_CHUNK):
        half = np.arange(start, min(start + BRUTE_FORCE_CHUNK, total), dtype=np.int64)
        costs = basis_costs(g, half << 1)
        k = int(np.argmax(costs))
        if costs[k] > best_cost:
            best_cost = float(costs[k])
            best_index = int(half[k]) << 1
    return CutAssignment(z=index_to_signs(best_index, g.n), cost=best_cost)


def jacobi_eigenvalues(
    matrix: np.ndarray,
    tol: float = JACOBI_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> Tuple[np.ndarray, int]:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.

    Returns (eigenvalues, sweeps used). Raises NumericalError with the
    remaining off-diagonal magnitude when `max_sweeps` is not enough.
    """
    a = np.array(matrix, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, atol=1e-12):
        raise ValidationError("Jacobi eigensolver needs a symmetric matrix")
    n = a.shape[0]
    off = 0.0
    for sweep in range(max_sweeps + 1):
        off = float(np.max(np.abs(a - np.diag(np.diag(a))))) if n > 1 else 0.0
        if off < tol:
            return np.sort(np.diag(a))[::-1].copy(), sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                sign = 1.0 if theta >= 0 else -1.0
                t = sign / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
    raise NumericalError(
        f"Jacobi did not converge in {max_sweeps} sweeps (residual {off:.3e})", residual=off
    )


def spectrum(g: Graph) -> SpectrumReport:
    lap, lap_sweeps = jacobi_eigenvalues(g.laplacian())
    adj, adj_sweeps = jacobi_eigenvalues(g.adjacency())
    return SpectrumReport(
        laplacian_eigenvalues=lap,
        adjacency_eigenvalues=adj,
        sweeps={"laplacian": lap_sweeps, "adjacency": adj_sweeps},
    )
