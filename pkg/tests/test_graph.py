"""Tests for framework.graph: generation, exact MaxCut, Jacobi spectra."""

import itertools
import sys
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core.errors import NumericalError, SizeError, ValidationError
from framework.graph import (
    Graph,
    brute_force_max,
    generate_regular,
    index_to_signs,
    jacobi_eigenvalues,
    maxcut_cost,
    interleaved_seeds,
    spectrum,
)


def _naive_max_cut(g: Graph) -> float:
    """All 2^n sign vectors, no symmetry reduction."""
    i, j, w = g.edge_arrays()
    idx = np.arange(1 << g.n)
    z = 1 - 2 * ((idx[:, None] >> np.arange(g.n)) & 1)
    return float((w * (1 - z[:, i] * z[:, j]) / 2).sum(axis=1).max())


def _random_graph(n: int, seed: int, weighted: bool = False) -> Graph:
    rng = np.random.default_rng(seed)
    nxg = nx.gnp_random_graph(n, 0.5, seed=seed)
    edges = [(u, v, float(rng.uniform(0.1, 2.0)) if weighted else 1.0) for u, v in nxg.edges()]
    return Graph.from_edges(n, edges)


def _complete(n: int) -> Graph:
    return Graph.from_edges(n, itertools.combinations(range(n), 2))


def _cycle(n: int) -> Graph:
    return Graph.from_edges(n, [(k, (k + 1) % n) for k in range(n)])


def test_generate_regular_is_connected_and_4_regular():
    for n in (8, 11, 16):
        g = generate_regular(n, 4, seed=n)
        assert np.all(g.degrees() == 4)
        assert g.num_edges == 2 * n
        assert g.is_connected()


def test_generate_regular_is_deterministic_per_seed():
    assert generate_regular(12, 4, seed=5).edges == generate_regular(12, 4, seed=5).edges


@pytest.mark.parametrize("n,degree", [(11, 3), (4, 4), (1, 1)])
def test_generate_regular_rejects_impossible_parameters(n, degree):
    with pytest.raises(ValidationError):
        generate_regular(n, degree, seed=0)


def test_graph_rejects_malformed_edges():
    with pytest.raises(ValidationError):
        Graph.from_edges(3, [(0, 0)])
    with pytest.raises(ValidationError):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(ValidationError):
        Graph.from_edges(3, [(0, 3)])


def test_graph_dict_round_trip_keeps_seed():
    g = generate_regular(10, 4, seed=3)
    h = Graph.from_dict(g.to_dict())
    assert h == g
    assert h.seed == 3


def test_maxcut_cost_small_cases():
    tri = _complete(3)
    assert maxcut_cost(tri, [1, 1, -1]) == 2.0
    assert maxcut_cost(tri, [1, 1, 1]) == 0.0
    with pytest.raises(ValidationError):
        maxcut_cost(tri, [1, 0, -1])


def test_basis_index_convention():
    assert index_to_signs(0b101, 3).tolist() == [-1, 1, -1]


@pytest.mark.parametrize(
    "g,expected",
    [(_complete(2), 1.0), (_complete(3), 2.0), (_complete(4), 4.0), (_cycle(4), 4.0), (_cycle(5), 4.0)],
)
def test_brute_force_known_values(g, expected):
    best = brute_force_max(g)
    assert best.cost == expected
    assert maxcut_cost(g, best.z) == expected
    assert best.z[0] == 1


def test_brute_force_matches_naive_enumeration_on_random_graphs():
    rng = np.random.default_rng(0)
    for t in range(200):
        n = int(rng.integers(2, 13))
        g = _random_graph(n, seed=t, weighted=bool(t % 2))
        assert brute_force_max(g).cost == pytest.approx(_naive_max_cut(g), abs=1e-12)


def test_brute_force_is_invariant_under_relabeling():
    g = generate_regular(12, 4, seed=9)
    perm = np.random.default_rng(1).permutation(12)
    assert brute_force_max(g.relabel(perm)).cost == brute_force_max(g).cost


def test_brute_force_size_guard():
    with pytest.raises(SizeError):
        brute_force_max(Graph.from_edges(31, [(0, 1)]))


def test_jacobi_matches_dense_eigensolver():
    rng = np.random.default_rng(2)
    for _ in range(10):
        a = rng.normal(size=(9, 9))
        sym = (a + a.T) / 2
        eigs, sweeps = jacobi_eigenvalues(sym)
        assert sweeps <= 100
        assert np.allclose(eigs, np.sort(np.linalg.eigvalsh(sym))[::-1], atol=1e-9)


def test_jacobi_rejects_non_symmetric_and_reports_non_convergence():
    with pytest.raises(ValidationError):
        jacobi_eigenvalues(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NumericalError) as info:
        jacobi_eigenvalues(np.array([[1.0, 1.0], [1.0, 2.0]]), max_sweeps=0)
    assert info.value.residual == pytest.approx(1.0)


def test_spectrum_of_k5_and_c4():
    k5 = spectrum(_complete(5))
    assert np.allclose(k5.laplacian_eigenvalues, [5, 5, 5, 5, 0], atol=1e-10)
    assert k5.spectral_gap == pytest.approx(5.0)
    c4 = spectrum(_cycle(4))
    assert np.allclose(c4.laplacian_eigenvalues, [4, 2, 2, 0], atol=1e-10)
    assert np.allclose(c4.adjacency_eigenvalues, [2, 0, 0, -2], atol=1e-10)


def test_laplacian_spectrum_matches_eigvalsh_on_regular_graphs():
    for seed in range(5):
        g = generate_regular(14, 4, seed=seed)
        ref = np.sort(np.linalg.eigvalsh(g.laplacian()))[::-1]
        assert np.allclose(spectrum(g).laplacian_eigenvalues, ref, atol=1e-9)


def test_interleaved_seeds_interleave():
    assert interleaved_seeds(5) == [0, 11, 10, 22, 20]


def test_five_vertex_4_regular_graph_is_k5():
    g = generate_regular(5, 4, seed=123)
    assert sorted((i, j) for i, j, _ in g.edges) == sorted(itertools.combinations(range(5), 2))


def test_alternating_cut_of_four_cycle():
    assert maxcut_cost(_cycle(4), [1, -1, 1, -1]) == 4.0
    assert maxcut_cost(_complete(2), [1, -1]) == 1.0
