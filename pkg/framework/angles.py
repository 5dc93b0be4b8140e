"""QAOA angle search: Nelder-Mead, the warm-start dataset protocol, depth studies.

Protocol for one depth over an ordered instance list:
  1. first instance: NM from `random_starts` random angle vectors, keep the best;
  2. every later instance: NM from the previous instance's best angles plus
     fresh random starts;
  3. once, for each instance whose ratio does not beat its GW ratio, NM
     again from every other instance's best angles.
Random angles are uniform with gamma in [0, 2pi) and beta in [0, pi).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from core.errors import MaxCutSelectError, ValidationError
from core.seed import derive_seed, make_rng

from .graph import Graph
from .qaoa import QaoaAngles, QaoaRun, QaoaSimulator

NM_F_TOL = 1e-8
NM_X_TOL = 1e-6
NM_STEP = 0.1
NM_ZERO_STEP = 0.00025
EVALS_PER_PARAMETER = 400
RANDOM_STARTS = 10
QAOA_SAMPLES = 1000

LogFn = Optional[Callable[[str], None]]


class NelderMeadResult(NamedTuple):
    x: np.ndarray
    f: float
    evaluations: int
    converged: bool


def initial_simplex(x0: np.ndarray, step: float = NM_STEP, zero_step: float = NM_ZERO_STEP) -> np.ndarray:
    """x0 plus d vertices, coordinate k scaled by (1 + step) or set to zero_step when 0."""
    d = x0.size
    sim = np.tile(x0, (d + 1, 1))
    for k in range(d):
        sim[k + 1, k] = (1.0 + step) * x0[k] if x0[k] != 0 else zero_step
    return sim


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0: Sequence[float],
    max_evaluations: Optional[int] = None,
    f_tol: float = NM_F_TOL,
    maximize: bool = False,
    x_tol: float = NM_X_TOL,
) -> NelderMeadResult:
    """Nelder-Mead (reflection 1, expansion 2, contraction 0.5, shrink 0.5).

    Terminates when the spread of simplex values drops below `f_tol` and
    every vertex lies within `x_tol` of the best one, or when the evaluation
    budget (default 400 per coordinate) runs out; in the latter case the
    best vertex is returned with converged=False. Agreeing values alone do
    not stop it: vertices straddling a symmetric optimum can tie early. With
    `maximize=True` the objective is negated internally and `f` is reported
    in the original sign.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.ndim != 1 or x0.size < 1:
        raise ValidationError("x0 must be a non-empty vector")
    budget = int(max_evaluations) if max_evaluations else EVALS_PER_PARAMETER * x0.size
    sign = -1.0 if maximize else 1.0

    res = minimize(
        lambda x: sign * float(objective(x)),
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": initial_simplex(x0),
            "xatol": x_tol,
            "fatol": f_tol,
            "maxfev": budget,
            "maxiter": budget,
            "adaptive": False,
        },
    )
    return NelderMeadResult(np.asarray(res.x, dtype=float), sign * float(res.fun), int(res.nfev), res.status == 0)


def random_angles(p: int, rng: np.random.Generator) -> QaoaAngles:
    gammas = rng.uniform(0.0, 2.0 * np.pi, size=p)
    betas = rng.uniform(0.0, np.pi, size=p)
    return QaoaAngles(tuple(gammas), tuple(betas))


@dataclass
class AngleSearchConfig:
    random_starts: int = RANDOM_STARTS
    evaluations_per_start: Optional[int] = None
    f_tol: float = NM_F_TOL
    seed: int = 0
    second_pass: bool = True

    def budget(self, p: int) -> int:
        return self.evaluations_per_start or EVALS_PER_PARAMETER * 2 * p


@dataclass
class _Best:
    angles: QaoaAngles
    f_p: float
    evaluations: int = 0
    budget_exhausted: bool = False

    def offer(self, result: NelderMeadResult) -> None:
        self.evaluations += result.evaluations
        if result.f > self.f_p:
            self.angles = QaoaAngles.from_vector(result.x)
            self.f_p = result.f
            self.budget_exhausted = not result.converged


def _search_from(
    sim: QaoaSimulator,
    starts: List[QaoaAngles],
    best: Optional[_Best],
    budget: int,
    f_tol: float,
) -> _Best:
    """NM from each start; the best over all starts (and `best`) wins."""
    objective = lambda x: sim.expected_cost(QaoaAngles.from_vector(x))
    for start in starts:
        if best is None:
            best = _Best(start, sim.expected_cost(start), evaluations=1)
        result = nelder_mead(objective, start.to_vector(), max_evaluations=budget, f_tol=f_tol, maximize=True)
        best.offer(result)
    assert best is not None
    return best


def optimize_dataset_angles(
    graphs: Sequence[Graph],
    p: int,
    c_max: Sequence[float],
    gw_ratios: Sequence[float],
    config: Optional[AngleSearchConfig] = None,
    warm_starts: Optional[Sequence[Optional[QaoaAngles]]] = None,
    simulators: Optional[Sequence[QaoaSimulator]] = None,
    pool: Optional[Sequence[QaoaAngles]] = None,
    log_fn: LogFn = None,
    errors: Optional[Dict[int, MaxCutSelectError]] = None,
) -> List[Optional[QaoaRun]]:
    """Optimize depth-p angles for every instance with the warm-start protocol.

    `warm_starts[k]` (e.g. the zero-padded depth p-1 optimum of instance k)
    is added as an extra start for instance k, which makes the optimized
    value non-decreasing in p. Every NM start gets the same evaluation
    budget; `budget_exhausted` marks instances whose best start ran out.
    `pool` holds depth-p optima of instances optimized earlier (resumed
    runs); they join the retry starts of the second pass. With `errors`
    given, an instance whose search raises is recorded there under its
    index, gets None in the result and is left out of later starts.
    """
    config = config or AngleSearchConfig()
    if p < 1:
        raise ValidationError(f"p must be >= 1, got {p}")
    if not (len(graphs) == len(c_max) == len(gw_ratios)):
        raise ValidationError("graphs, c_max and gw_ratios must be aligned")
    if warm_starts is not None and len(warm_starts) != len(graphs):
        raise ValidationError("warm_starts must be aligned with graphs")
    if any(c <= 0 for c in c_max):
        raise ValidationError("c_max must be positive for every instance")
    log = log_fn or (lambda _m: None)
    budget = config.budget(p)
    sims = list(simulators) if simulators is not None else [QaoaSimulator(g) for g in graphs]

    bests: List[Optional[_Best]] = []
    previous: Optional[QaoaAngles] = None
    for k, sim in enumerate(sims):
        rng = make_rng(config.seed, p, k)
        starts: List[QaoaAngles] = []
        if warm_starts is not None and warm_starts[k] is not None:
            starts.append(warm_starts[k].padded(p))
        if previous is not None:
            starts.append(previous)
        starts.extend(random_angles(p, rng) for _ in range(config.random_starts))
        if not starts:
            starts.append(random_angles(p, rng))
        try:
            best = _search_from(sim, starts, None, budget, config.f_tol)
        except MaxCutSelectError as e:
            if errors is None:
                raise
            errors[k] = e
            bests.append(None)
            log(f"[qaoa p={p}] instance {k} failed: {e}")
            continue
        bests.append(best)
        previous = best.angles
        log(f"[qaoa p={p}] instance {k}: ratio={best.f_p / c_max[k]:.4f} evals={best.evaluations}")

    extra = [a.padded(p) if a.p < p else a for a in (pool or [])]
    if config.second_pass and len(sims) + len(extra) > 1:
        found = [b.angles if b is not None else None for b in bests]
        for k, sim in enumerate(sims):
            if bests[k] is None or bests[k].f_p / c_max[k] > gw_ratios[k]:
                continue
            others = [a for j, a in enumerate(found) if j != k and a is not None] + extra
            if not others:
                continue
            before = bests[k].f_p
            try:
                _search_from(sim, others, bests[k], budget, config.f_tol)
            except MaxCutSelectError as e:
                if errors is None:
                    raise
                errors[k] = e
                bests[k] = None
                log(f"[qaoa p={p}] retry instance {k} failed: {e}")
                continue
            log(
                f"[qaoa p={p}] retry instance {k}: ratio {before / c_max[k]:.4f} -> "
                f"{bests[k].f_p / c_max[k]:.4f}"
            )

    return [
        None
        if b is None
        else QaoaRun(
            angles=b.angles,
            f_p=b.f_p,
            ratio=b.f_p / c_max[k],
            evaluations=b.evaluations,
            seed=derive_seed(config.seed, p),
            budget_exhausted=b.budget_exhausted,
        )
        for k, b in enumerate(bests)
    ]


def attach_sample_std(
    run: QaoaRun,
    sim: QaoaSimulator,
    c_max: float,
    m: int,
    seed: int,
) -> QaoaRun:
    """Sample m bitstrings at the run's angles; std of C(z)/C_max."""
    sample = sim.sample(run.angles, m, seed)
    return replace(run, sample_std=sample.std / c_max)


def run_depth_schedule(
    graphs: Sequence[Graph],
    depths: Sequence[int],
    c_max: Sequence[float],
    gw_ratios: Sequence[float],
    config: Optional[AngleSearchConfig] = None,
    samples: int = QAOA_SAMPLES,
    log_fn: LogFn = None,
) -> Dict[int, List[QaoaRun]]:
    """optimize_dataset_angles for each depth, warm-starting from the padded previous depth."""
    config = config or AngleSearchConfig()
    sims = [QaoaSimulator(g) for g in graphs]
    out: Dict[int, List[QaoaRun]] = {}
    warm: Optional[List[Optional[QaoaAngles]]] = None
    for p in sorted(depths):
        runs = optimize_dataset_angles(
            graphs, p, c_max, gw_ratios, config=config, warm_starts=warm, simulators=sims, log_fn=log_fn
        )
        runs = [
            attach_sample_std(run, sims[k], c_max[k], samples, derive_seed(config.seed, p, k, 1))
            for k, run in enumerate(runs)
        ]
        out[p] = runs
        warm = [run.angles for run in runs]
    return out


class LogFit(NamedTuple):
    a: float
    b: float
    crossing_depth: Optional[float]


def fit_log_depth(
    depths: Sequence[int],
    mean_stds: Sequence[float],
    reference_std: Optional[float] = None,
) -> LogFit:
    """Least squares mean_std ~ a ln(depth) + b.

    `crossing_depth` is where the fit reaches `reference_std` (e.g. the GW
    std) while decreasing; None without a reference or when it never does.
    """
    d = np.asarray(depths, dtype=float)
    y = np.asarray(mean_stds, dtype=float)
    if d.shape != y.shape or d.ndim != 1:
        raise ValidationError("depths and mean_stds must be aligned 1-D sequences")
    if np.unique(d).size < 2:
        raise ValidationError("log fit needs at least two distinct depths")
    if np.any(d < 1) or np.any(y <= 0):
        raise ValidationError("depths must be >= 1 and mean_stds > 0")
    design = np.column_stack([np.log(d), np.ones_like(d)])
    (a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    crossing: Optional[float] = None
    if reference_std is not None and a < 0:
        crossing = float(np.exp((reference_std - b) / a))
    return LogFit(float(a), float(b), crossing)
