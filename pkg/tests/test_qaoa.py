"""Tests for framework.qaoa: statevector simulation, expectation, sampling."""

import sys
from functools import reduce
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core.errors import SizeError, ValidationError
from framework.graph import Graph, generate_regular
from framework.qaoa import (
    QaoaAngles,
    QaoaSimulator,
    apply_qaoa_circuit,
    expected_cost,
    sample_cut_distribution,
    sample_from_probabilities,
)

K2 = Graph.from_edges(2, [(0, 1)])


def _k2_closed_form(gamma: float, beta: float) -> float:
    return 0.5 * (1.0 - np.sin(4 * beta) * np.sin(gamma))


def _dense_reference_state(g: Graph, angles: QaoaAngles) -> np.ndarray:
    """Kronecker-product circuit with explicit Z_i Z_j and e^{-i b X} matrices."""
    n = g.n
    dim = 1 << n
    idx = np.arange(dim)
    hc = np.zeros(dim)
    for i, j, w in g.edges:
        zi = 1 - 2 * ((idx >> i) & 1)
        zj = 1 - 2 * ((idx >> j) & 1)
        hc += (w / 2) * zi * zj
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    state = np.full(dim, 1 / np.sqrt(dim), dtype=complex)
    for gamma, beta in zip(angles.gammas, angles.betas):
        state = np.exp(-1j * gamma * hc) * state
        u = np.cos(beta) * np.eye(2) - 1j * np.sin(beta) * x
        state = reduce(np.kron, [u] * n) @ state
    return state


def test_zero_angles_give_half_the_edges():
    for seed in range(20):
        g = generate_regular(10, 4, seed=seed)
        for p in (1, 3):
            assert expected_cost(g, QaoaAngles.zeros(p)) == pytest.approx(g.num_edges / 2, abs=1e-9)


def test_weighted_zero_angles_give_half_the_weight():
    g = Graph.from_edges(3, [(0, 1, 0.5), (1, 2, 2.0)])
    assert expected_cost(g, QaoaAngles.zeros(1)) == pytest.approx(1.25, abs=1e-12)


def test_norm_is_preserved_after_every_layer():
    g = generate_regular(10, 4, seed=3)
    rng = np.random.default_rng(0)
    angles = QaoaAngles(tuple(rng.uniform(0, 2 * np.pi, 10)), tuple(rng.uniform(0, np.pi, 10)))
    norms = []
    apply_qaoa_circuit(g, angles, on_layer=lambda k, s: norms.append(float(np.sum(np.abs(s) ** 2))))
    assert len(norms) == 10
    assert np.allclose(norms, 1.0, atol=1e-9)


@pytest.mark.parametrize("gamma", np.linspace(0, 2 * np.pi, 7))
@pytest.mark.parametrize("beta", np.linspace(0, np.pi, 5))
def test_single_edge_matches_closed_form(gamma, beta):
    f = expected_cost(K2, QaoaAngles((gamma,), (beta,)))
    assert f == pytest.approx(_k2_closed_form(gamma, beta), abs=1e-12)


def test_single_edge_optimum_reaches_ratio_one():
    assert expected_cost(K2, QaoaAngles((np.pi / 2,), (3 * np.pi / 8,))) == pytest.approx(1.0, abs=1e-12)


def test_statevector_matches_dense_kronecker_circuit():
    g = Graph.from_edges(4, [(0, 1, 1.0), (1, 2, 0.7), (2, 3, 1.3), (0, 3, 1.0), (0, 2, 0.4)])
    rng = np.random.default_rng(5)
    angles = QaoaAngles(tuple(rng.uniform(0, 2 * np.pi, 3)), tuple(rng.uniform(0, np.pi, 3)))
    ours = apply_qaoa_circuit(g, angles).amplitudes
    assert np.allclose(ours, _dense_reference_state(g, angles), atol=1e-12)


def test_padding_with_zero_layers_keeps_the_state():
    g = generate_regular(8, 4, seed=2)
    angles = QaoaAngles((0.3, 1.1), (0.2, 0.9))
    assert expected_cost(g, angles.padded(4)) == pytest.approx(expected_cost(g, angles), abs=1e-12)
    with pytest.raises(ValidationError):
        angles.padded(1)


def test_angle_vector_round_trip_and_validation():
    angles = QaoaAngles((0.1, 0.2), (0.3, 0.4))
    assert QaoaAngles.from_vector(angles.to_vector()) == angles
    assert angles.p == 2
    with pytest.raises(ValidationError):
        QaoaAngles((0.1,), (0.2, 0.3))
    with pytest.raises(ValidationError):
        QaoaAngles.from_vector([0.1, 0.2, 0.3])


def test_point_mass_distribution_has_zero_std():
    probs = np.zeros(8)
    probs[5] = 1.0
    costs = np.arange(8, dtype=float)
    sample = sample_from_probabilities(probs, costs, m=100, seed=0)
    assert sample.mean == 5.0
    assert sample.std == 0.0
    assert sample.best == 5.0


def test_sample_mean_tracks_expectation():
    g = generate_regular(10, 4, seed=7)
    angles = QaoaAngles((0.4,), (0.3,))
    sim = QaoaSimulator(g)
    f = sim.expected_cost(angles)
    sample = sample_cut_distribution(sim, angles, m=20000, seed=1)
    assert abs(sample.mean - f) < 0.1
    assert sample.best <= 20.0
    assert sample_cut_distribution(sim, angles, m=50, seed=3) == sample_cut_distribution(sim, angles, m=50, seed=3)


def test_simulator_size_guard():
    with pytest.raises(SizeError):
        QaoaSimulator(Graph.from_edges(27, [(0, 1)]))


def test_zero_angles_leave_the_uniform_superposition():
    g = generate_regular(8, 4, seed=0)
    amps = apply_qaoa_circuit(g, QaoaAngles.zeros(3)).amplitudes
    assert np.allclose(amps, 2 ** (-8 / 2), atol=1e-12)


def test_uniform_sampling_mean_is_half_the_edges():
    g = generate_regular(10, 4, seed=1)
    sample = sample_cut_distribution(g, QaoaAngles.zeros(1), m=100_000, seed=2)
    assert abs(sample.mean - g.num_edges / 2) <= 4 * sample.std / np.sqrt(100_000)


def test_expected_cost_is_invariant_under_vertex_relabeling():
    g = generate_regular(9, 4, seed=4)
    rng = np.random.default_rng(8)
    for _ in range(5):
        p = int(rng.integers(1, 4))
        angles = QaoaAngles(tuple(rng.uniform(0, 2 * np.pi, p)), tuple(rng.uniform(0, np.pi, p)))
        relabeled = g.relabel(rng.permutation(g.n).tolist())
        assert expected_cost(relabeled, angles) == pytest.approx(expected_cost(g, angles), abs=1e-10)


def test_expected_cost_periodicity_in_gamma_and_beta():
    # odd edge count: the 2pi shift in gamma multiplies the state by a global -1
    g = Graph.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2), (1, 3)])
    sim = QaoaSimulator(g)
    rng = np.random.default_rng(12)
    for _ in range(10):
        gammas = rng.uniform(0, 2 * np.pi, 2)
        betas = rng.uniform(0, np.pi, 2)
        base = sim.expected_cost(QaoaAngles(tuple(gammas), tuple(betas)))
        k = int(rng.integers(0, 2))
        shifted_gamma = gammas.copy()
        shifted_gamma[k] += 2 * np.pi
        shifted_beta = betas.copy()
        shifted_beta[k] -= np.pi
        assert sim.expected_cost(QaoaAngles(tuple(shifted_gamma), tuple(betas))) == pytest.approx(base, abs=1e-10)
        assert sim.expected_cost(QaoaAngles(tuple(gammas), tuple(shifted_beta))) == pytest.approx(base, abs=1e-10)
