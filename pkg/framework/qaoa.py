"""Dense statevector QAOA for MaxCut.

H_C = sum_(i,j) (w_ij/2) Z_i Z_j is diagonal with <z|H_C|z> = W/2 - C(z),
H_B = sum_j X_j, and the state after p layers is
e^{-i b_p H_B} e^{-i g_p H_C} ... e^{-i b_1 H_B} e^{-i g_1 H_C} |+>^n.
Basis index bit i holds qubit i (bit set <=> z_i = -1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import NumericalError, SizeError, ValidationError

from .graph import Graph, basis_costs

MAX_QUBITS = 26
NORM_TOL = 1e-9


@dataclass(frozen=True)
class QaoaAngles:
    gammas: Tuple[float, ...]
    betas: Tuple[float, ...]

    def __post_init__(self) -> None:
        gammas = tuple(float(x) for x in self.gammas)
        betas = tuple(float(x) for x in self.betas)
        if len(gammas) != len(betas) or len(gammas) < 1:
            raise ValidationError(
                f"need equally many gammas and betas (p >= 1), got {len(gammas)} and {len(betas)}"
            )
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "betas", betas)

    @property
    def p(self) -> int:
        return len(self.gammas)

    def to_vector(self) -> np.ndarray:
        return np.asarray(self.gammas + self.betas, dtype=float)

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "QaoaAngles":
        x = [float(v) for v in x]
        if len(x) % 2 != 0 or not x:
            raise ValidationError(f"angle vector length must be even and positive, got {len(x)}")
        p = len(x) // 2
        return cls(tuple(x[:p]), tuple(x[p:]))

    @classmethod
    def zeros(cls, p: int) -> "QaoaAngles":
        return cls((0.0,) * p, (0.0,) * p)

    def padded(self, p: int) -> "QaoaAngles":
        """Same state at depth p: extra layers with zero angles act as identity."""
        if p < self.p:
            raise ValidationError(f"cannot pad depth {self.p} down to {p}")
        extra = (0.0,) * (p - self.p)
        return QaoaAngles(self.gammas + extra, self.betas + extra)


@dataclass
class QaoaRun:
    angles: QaoaAngles
    f_p: float
    ratio: float
    sample_std: Optional[float] = None
    evaluations: int = 0
    seed: Optional[int] = None
    budget_exhausted: bool = False

    @property
    def p(self) -> int:
        return self.angles.p


@dataclass
class Statevector:
    n: int
    amplitudes: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sum(self.probabilities()))


class CutSample(NamedTuple):
    mean: float
    std: float
    best: float


LayerHook = Callable[[int, np.ndarray], None]


class QaoaSimulator:
    """Statevector simulator bound to one graph; caches the C(z) table."""

    def __init__(self, g: Graph, max_qubits: int = MAX_QUBITS):
        if g.n > max_qubits:
            raise SizeError(f"statevector simulation refuses n={g.n} > {max_qubits} qubits")
        self.graph = g
        self.n = g.n
        self.costs = basis_costs(g, np.arange(1 << g.n, dtype=np.int64))
        # <z|H_C|z> = W/2 - C(z)
        self.hc_diagonal = g.total_weight / 2.0 - self.costs

    def _apply_mixer(self, state: np.ndarray, beta: float) -> None:
        c, s = np.cos(beta), np.sin(beta)
        for q in range(self.n):
            view = state.reshape(-1, 2, 1 << q)
            a = view[:, 0, :].copy()
            b = view[:, 1, :]
            view[:, 0, :] = c * a - 1j * s * b
            view[:, 1, :] = c * b - 1j * s * a

    def statevector(self, angles: QaoaAngles, on_layer: Optional[LayerHook] = None) -> Statevector:
        dim = 1 << self.n
        state = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
        for k, (gamma, beta) in enumerate(zip(angles.gammas, angles.betas), start=1):
            state *= np.exp(-1j * gamma * self.hc_diagonal)
            self._apply_mixer(state, beta)
            if on_layer is not None:
                on_layer(k, state)
        norm = float(np.sum(np.abs(state) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise NumericalError(f"statevector norm drifted to {norm!r}", residual=abs(norm - 1.0))
        return Statevector(self.n, state)

    def expected_cost(self, angles: QaoaAngles) -> float:
        probs = self.statevector(angles).probabilities()
        return float(probs @ self.costs)

    def sample(self, angles: QaoaAngles, m: int, seed: Optional[int]) -> CutSample:
        return sample_from_probabilities(self.statevector(angles).probabilities(), self.costs, m, seed)


def sample_from_probabilities(probs: np.ndarray, costs: np.ndarray, m: int, seed: Optional[int]) -> CutSample:
    """Inverse-CDF sampling of m basis states; mean/std/best of their cut values."""
    if m < 1:
        raise ValidationError(f"m must be >= 1, got {m}")
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    u = np.random.default_rng(seed).random(m)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    drawn = costs[idx]
    return CutSample(float(drawn.mean()), float(drawn.std()), float(drawn.max()))


GraphOrSim = Union[Graph, QaoaSimulator]


def _simulator(g: GraphOrSim) -> QaoaSimulator:
    return g if isinstance(g, QaoaSimulator) else QaoaSimulator(g)


def apply_qaoa_circuit(g: GraphOrSim, angles: QaoaAngles, on_layer: Optional[LayerHook] = None) -> Statevector:
    return _simulator(g).statevector(angles, on_layer=on_layer)


def expected_cost(g: GraphOrSim, angles: QaoaAngles) -> float:
    """F_p = sum_z |amp_z|^2 C(z), i.e. W/2 - <H_C>."""
    return _simulator(g).expected_cost(angles)


def sample_cut_distribution(g: GraphOrSim, angles: QaoaAngles, m: int, seed: Optional[int] = None) -> CutSample:
    return _simulator(g).sample(angles, m, seed)
