"""End-to-end dataset generation, resumable per (instance, depth), and summaries.

Dataset directory layout:
  manifest.json          the ExperimentManifest (+ its sha256)
  instances.json         graphs keyed by instance id
  baselines.csv          exact C_max and GW statistics per instance
  features.csv           the 20 features per instance (+ features_schema.json)
  runs.csv               one row per (instance, depth) QAOA optimum
  labels.csv             criterion labels at the labeling depth
  summary.csv, boxplot.csv, std_by_depth.csv   plot data
  failures.csv           per-instance failures
  repro_manifest.json    argv, versions, input hashes
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import joblib
import numpy as np
from joblib import Parallel, delayed

from core.errors import GapError, MaxCutSelectError, ValidationError
from core.io import load_json, read_csv, save_json, write_csv
from core.repro import fingerprint, write_repro_manifest
from core.seed import derive_seed
from core.stats import bootstrap_ci, boxplot_whiskers, describe

from . import __version__
from .angles import AngleSearchConfig, attach_sample_std, fit_log_depth, optimize_dataset_angles
from .features import FEATURE_NAMES, FEATURE_SCHEMA, compute_features
from .graph import Graph, brute_force_max, generate_regular, interleaved_seeds
from .gw import SDP_MAX_ITERS, SDP_TOL, run_gw
from .qaoa import QaoaAngles, QaoaSimulator
from .selector import label_criterion1, label_criterion2
from .utils import load_yaml

LogFn = Optional[Callable[[str], None]]

BASELINE_COLUMNS = [
    "instance_id",
    "n",
    "num_edges",
    "c_max",
    "max_cut_assignment",
    "c_rlx",
    "gw_expected_cost",
    "gw_std_cost",
    "gw_best_cost",
    "gw_ratio",
    "sdp_converged",
]
FEATURE_COLUMNS = ["instance_id", "n"] + FEATURE_NAMES
RUN_COLUMNS = [
    "instance_id",
    "n",
    "p",
    "f_p",
    "ratio",
    "sample_std",
    "gw_ratio",
    "qaoa_beats_gw",
    "evaluations",
    "seed",
    "budget_exhausted",
    "gammas",
    "betas",
]
LABEL_COLUMNS = ["instance_id", "n", "p_used", "qaoa_ratio", "gw_ratio", "label_crit1", "label_crit2"]
FAILURE_COLUMNS = ["instance_id", "stage", "error_type", "message"]
SUMMARY_COLUMNS = [
    "depth",
    "count",
    "min",
    "q1",
    "median",
    "q3",
    "max",
    "mean",
    "median_ci_low",
    "median_ci_high",
    "pct_qaoa_beats_gw",
    "mean_sample_std",
]
BOXPLOT_COLUMNS = ["depth", "min", "whisker_low", "q1", "median", "q3", "whisker_high", "max", "n_outliers"]
STD_COLUMNS = ["depth", "mean_sample_std", "gw_mean_std", "fit_a", "fit_b", "crossing_depth"]

SEED_SCHEMES = ("derived", "interleaved")


@dataclass
class ExperimentManifest:
    n_range: Tuple[int, int] = (11, 24)
    instances_per_n: int = 20
    degree: int = 4
    depths: List[int] = field(default_factory=lambda: list(range(1, 11)))
    random_starts: int = 10
    nm_budget: Optional[int] = None
    seed_root: int = 0
    seed_scheme: str = "derived"
    gw_projections: int = 1000
    qaoa_samples: int = 1000
    label_depth: Optional[int] = None
    second_pass: bool = True
    sdp_tol: float = SDP_TOL
    sdp_max_iters: int = SDP_MAX_ITERS
    output_dir: str = "runs/dataset"
    threads: Optional[int] = None

    def __post_init__(self) -> None:
        lo, hi = (int(v) for v in self.n_range)
        self.n_range = (lo, hi)
        self.depths = sorted({int(p) for p in self.depths})
        if lo < 2 or hi < lo:
            raise ValidationError(f"n_range must satisfy 2 <= lo <= hi, got {self.n_range}")
        if self.instances_per_n < 1:
            raise ValidationError("instances_per_n must be >= 1")
        if not self.depths or self.depths[0] < 1:
            raise ValidationError("depths must be a non-empty list of integers >= 1")
        if self.seed_scheme not in SEED_SCHEMES:
            raise ValidationError(f"seed_scheme must be one of {SEED_SCHEMES}, got {self.seed_scheme!r}")
        if self.label_depth is not None and self.label_depth not in self.depths:
            raise ValidationError(f"label_depth {self.label_depth} is not among depths {self.depths}")
        if self.gw_projections < 1 or self.qaoa_samples < 1 or self.random_starts < 0:
            raise ValidationError("gw_projections and qaoa_samples must be >= 1, random_starts >= 0")
        if self.threads is None:
            self.threads = max(1, int(joblib.cpu_count(only_physical_cores=True)))
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")

    @property
    def p_label(self) -> int:
        return self.label_depth if self.label_depth is not None else self.depths[-1]

    @property
    def sizes(self) -> List[int]:
        return list(range(self.n_range[0], self.n_range[1] + 1))

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["n_range"] = list(self.n_range)
        return d

    @classmethod
    def from_dict(cls, obj: Dict[str, Any]) -> "ExperimentManifest":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(obj) - known - {"manifest_sha256"})
        if unknown:
            raise ValidationError(f"unknown manifest keys: {', '.join(unknown)}")
        kwargs = {k: v for k, v in obj.items() if k in known}
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as e:
            if isinstance(e, ValidationError):
                raise
            raise ValidationError(f"malformed manifest: {e}") from e

    def sha256(self) -> str:
        """Hash of everything that affects results (not output_dir or threads)."""
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("threads")
        return fingerprint(d)

    def angle_config(self) -> AngleSearchConfig:
        return AngleSearchConfig(
            random_starts=self.random_starts,
            evaluations_per_start=self.nm_budget,
            seed=derive_seed(self.seed_root, 3),
            second_pass=self.second_pass,
        )


def instance_id(n: int, k: int) -> str:
    return f"n{n:02d}_i{k:02d}"


def instance_seed(manifest: ExperimentManifest, n: int, k: int) -> int:
    if manifest.seed_scheme == "interleaved":
        return interleaved_seeds(manifest.instances_per_n)[k]
    return derive_seed(manifest.seed_root, n, k)


class _Dataset:
    """Paths and provenance of one dataset directory."""

    def __init__(self, root: Path, manifest_hash: str):
        self.root = Path(root)
        self.provenance = {"manifest_sha256": manifest_hash, "tool_version": __version__}

    def path(self, name: str) -> Path:
        return self.root / name

    def rows(self, name: str) -> List[Dict[str, str]]:
        p = self.path(name)
        return read_csv(p) if p.exists() else []

    def write(self, name: str, header: Sequence[str], rows: Sequence[Dict[str, Any]]) -> None:
        write_csv(self.path(name), header, rows, provenance=self.provenance)


def _check_existing_manifest(root: Path, manifest: ExperimentManifest) -> None:
    path = root / "manifest.json"
    if not path.exists():
        return
    stored = load_json(path)
    if stored.get("manifest_sha256") != manifest.sha256():
        raise ValidationError(
            f"{root} holds a dataset for a different manifest "
            f"({stored.get('manifest_sha256')} != {manifest.sha256()})"
        )


def _generate(manifest: ExperimentManifest, n: int, k: int) -> Tuple[str, Any]:
    iid = instance_id(n, k)
    try:
        return iid, generate_regular(n, manifest.degree, instance_seed(manifest, n, k))
    except MaxCutSelectError as e:
        return iid, e


def _solve_instance(manifest: ExperimentManifest, iid: str, g: Graph) -> Tuple[str, Any, Any, str]:
    """Brute force, GW and features for one instance; (id, baseline, features, failed stage)."""
    stage = "oracle"
    try:
        best = brute_force_max(g)
        stage = "gw"
        n, k = int(iid[1:3]), int(iid[5:])
        sol, stats = run_gw(
            g,
            m=manifest.gw_projections,
            seed=derive_seed(manifest.seed_root, n, k, 2),
            tol=manifest.sdp_tol,
            max_iters=manifest.sdp_max_iters,
        )
        baseline = {
            "instance_id": iid,
            "n": g.n,
            "num_edges": g.num_edges,
            "c_max": best.cost,
            "max_cut_assignment": best.as_bits(),
            "c_rlx": sol.relaxed_cost,
            "gw_expected_cost": stats.expected_cost,
            "gw_std_cost": stats.std_cost,
            "gw_best_cost": stats.best_cost,
            "gw_ratio": stats.expected_cost / best.cost,
            "sdp_converged": sol.converged,
        }
        stage = "features"
        fv = compute_features(g, sol, stats)
        features = {"instance_id": iid, "n": g.n, **fv.to_dict()}
        return iid, baseline, features, ""
    except MaxCutSelectError as e:
        return iid, e, None, stage


def _failure(iid: str, stage: str, err: Exception) -> Dict[str, str]:
    return {"instance_id": iid, "stage": stage, "error_type": type(err).__name__, "message": str(err)}


def _joined(values: Sequence[float]) -> str:
    return ";".join(repr(float(v)) for v in values)


def _angles_from_row(row: Dict[str, str]) -> QaoaAngles:
    return QaoaAngles(
        tuple(float(v) for v in row["gammas"].split(";")),
        tuple(float(v) for v in row["betas"].split(";")),
    )


def run_experiment(
    manifest: ExperimentManifest,
    log_fn: LogFn = None,
    command_argv: Optional[Sequence[str]] = None,
) -> Path:
    """Generate (or complete) the dataset directory described by `manifest`.

    Work already on disk is reused: instances, baselines and features per
    instance id, QAOA rows per (instance id, depth). Per-instance failures
    are written to failures.csv and the instance is dropped from later stages.
    """
    log = log_fn or (lambda _m: None)
    root = Path(manifest.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    _check_existing_manifest(root, manifest)
    start = datetime.now().isoformat(timespec="seconds")
    mhash = manifest.sha256()
    ds = _Dataset(root, mhash)
    save_json({**manifest.to_dict(), "manifest_sha256": mhash}, root / "manifest.json")
    save_json(FEATURE_SCHEMA, root / "features_schema.json")
    parallel = Parallel(n_jobs=manifest.threads, prefer="threads")
    failures: Dict[str, Dict[str, str]] = {}

    # instances
    inst_path = root / "instances.json"
    graphs: Dict[str, Graph] = {}
    if inst_path.exists():
        graphs = {iid: Graph.from_dict(obj) for iid, obj in load_json(inst_path)["instances"].items()}
        log(f"[experiment] reusing {len(graphs)} instances")
    wanted = [(n, k) for n in manifest.sizes for k in range(manifest.instances_per_n)]
    todo = [(n, k) for n, k in wanted if instance_id(n, k) not in graphs]
    for iid, result in parallel(delayed(_generate)(manifest, n, k) for n, k in todo):
        if isinstance(result, Exception):
            failures[iid] = _failure(iid, "generate", result)
            log(f"[experiment] {iid} generation failed: {result}")
        else:
            graphs[iid] = result
    graphs = dict(sorted(graphs.items()))
    save_json(
        {"manifest_sha256": mhash, "instances": {iid: g.to_dict() for iid, g in graphs.items()}},
        inst_path,
    )

    # baselines + features
    baselines = {row["instance_id"]: row for row in ds.rows("baselines.csv")}
    features = {row["instance_id"]: row for row in ds.rows("features.csv")}
    pending = [iid for iid in graphs if iid not in baselines or iid not in features]
    if len(pending) < len(graphs):
        log(f"[experiment] skipping {len(graphs) - len(pending)} instances with baselines and features")
    for iid, baseline, feats, stage in parallel(delayed(_solve_instance)(manifest, iid, graphs[iid]) for iid in pending):
        if isinstance(baseline, Exception):
            failures[iid] = _failure(iid, stage, baseline)
            log(f"[experiment] {iid} failed at {stage}: {baseline}")
            continue
        baselines[iid] = baseline
        features[iid] = feats
    usable = [iid for iid in graphs if iid in baselines and iid in features]
    ds.write("baselines.csv", BASELINE_COLUMNS, [baselines[i] for i in usable])
    ds.write("features.csv", FEATURE_COLUMNS, [features[i] for i in usable])

    # QAOA depth schedule, serial over instances
    runs: Dict[Tuple[str, int], Dict[str, Any]] = {
        (row["instance_id"], int(row["p"])): row for row in ds.rows("runs.csv") if row["instance_id"] in usable
    }
    c_max = {iid: float(baselines[iid]["c_max"]) for iid in usable}
    gw_ratio = {iid: float(baselines[iid]["gw_ratio"]) for iid in usable}
    sims: Dict[str, QaoaSimulator] = {}
    config = manifest.angle_config()
    previous_depth: Optional[int] = None
    qaoa_failed: List[str] = []

    def fail_qaoa(iid: str, err: MaxCutSelectError) -> None:
        failures[iid] = _failure(iid, "qaoa", err)
        qaoa_failed.append(iid)
        log(f"[experiment] {iid} failed at qaoa: {err}")

    for p in manifest.depths:
        missing = [iid for iid in usable if (iid, p) not in runs]
        if not missing:
            log(f"[experiment] depth {p} complete, skipping")
            previous_depth = p
            continue
        for iid in list(missing):
            if iid in sims:
                continue
            try:
                sims[iid] = QaoaSimulator(graphs[iid])
            except MaxCutSelectError as e:
                fail_qaoa(iid, e)
                missing.remove(iid)
        warm = None
        if previous_depth is not None:
            warm = [_angles_from_row(runs[(iid, previous_depth)]) for iid in missing]
        pool = [_angles_from_row(runs[(iid, p)]) for iid in usable if (iid, p) in runs]
        errors: Dict[int, MaxCutSelectError] = {}
        results = optimize_dataset_angles(
            [graphs[i] for i in missing],
            p,
            [c_max[i] for i in missing],
            [gw_ratio[i] for i in missing],
            config=config,
            warm_starts=warm,
            simulators=[sims[i] for i in missing],
            pool=pool,
            log_fn=log,
            errors=errors,
        )
        for pos, (iid, run) in enumerate(zip(missing, results)):
            if run is None:
                fail_qaoa(iid, errors[pos])
                continue
            n, k = int(iid[1:3]), int(iid[5:])
            try:
                run = attach_sample_std(
                    run, sims[iid], c_max[iid], manifest.qaoa_samples, derive_seed(manifest.seed_root, n, k, 4, p)
                )
            except MaxCutSelectError as e:
                fail_qaoa(iid, e)
                continue
            runs[(iid, p)] = {
                "instance_id": iid,
                "n": graphs[iid].n,
                "p": p,
                "f_p": run.f_p,
                "ratio": run.ratio,
                "sample_std": run.sample_std,
                "gw_ratio": gw_ratio[iid],
                "qaoa_beats_gw": run.ratio > gw_ratio[iid],
                "evaluations": run.evaluations,
                "seed": run.seed,
                "budget_exhausted": run.budget_exhausted,
                "gammas": _joined(run.angles.gammas),
                "betas": _joined(run.angles.betas),
            }
            if run.budget_exhausted:
                log(f"[qaoa p={p}] {iid}: best start exhausted its evaluation budget")
        if qaoa_failed:
            usable = [iid for iid in usable if iid not in qaoa_failed]
            runs = {key: row for key, row in runs.items() if key[0] in usable}
        ds.write("runs.csv", RUN_COLUMNS, [runs[key] for key in sorted(runs, key=lambda t: (t[0], t[1]))])
        previous_depth = p
    if qaoa_failed:
        ds.write("baselines.csv", BASELINE_COLUMNS, [baselines[i] for i in usable])
        ds.write("features.csv", FEATURE_COLUMNS, [features[i] for i in usable])
    ds.write("runs.csv", RUN_COLUMNS, [runs[key] for key in sorted(runs, key=lambda t: (t[0], t[1]))])

    # labels at the labeling depth
    p_used = manifest.p_label
    labels = []
    for iid in usable:
        q = float(runs[(iid, p_used)]["ratio"])
        g = gw_ratio[iid]
        labels.append(
            {
                "instance_id": iid,
                "n": graphs[iid].n,
                "p_used": p_used,
                "qaoa_ratio": q,
                "gw_ratio": g,
                "label_crit1": label_criterion1(q, g),
                "label_crit2": label_criterion2(q, g),
            }
        )
    ds.write("labels.csv", LABEL_COLUMNS, labels)
    ds.write("failures.csv", FAILURE_COLUMNS, [failures[i] for i in sorted(failures)])

    if usable:
        summarize(root, log_fn=log)
    write_repro_manifest(
        root,
        run_id=root.name,
        start_time=start,
        end_time=datetime.now().isoformat(timespec="seconds"),
        command_argv=list(command_argv or []),
        seed=manifest.seed_root,
        inputs=[root / "instances.json", root / "manifest.json"],
        config_dict=manifest.to_dict(),
        extra_fields={"manifest_sha256": mhash, "tool_version": __version__, "failures": len(failures)},
    )
    log(f"[experiment] {len(usable)} instances, {len(failures)} failures -> {root}")
    return root


@dataclass
class SummaryTable:
    summary: List[Dict[str, Any]]
    boxplot: List[Dict[str, Any]]
    std_by_depth: List[Dict[str, Any]]


def _stats_row(label: Any, ratios: Sequence[float], seed: int) -> Dict[str, Any]:
    d = describe(ratios)
    ci = bootstrap_ci(ratios, seed=seed)
    return {
        "depth": label,
        "count": d["n"],
        "min": d["min"],
        "q1": d["q1"],
        "median": d["median"],
        "q3": d["q3"],
        "max": d["max"],
        "mean": d["mean"],
        "median_ci_low": ci["ci_low"],
        "median_ci_high": ci["ci_high"],
    }


def _box_row(label: Any, ratios: Sequence[float]) -> Dict[str, Any]:
    d = describe(ratios)
    return {"depth": label, **{k: d[k] for k in ("min", "q1", "median", "q3", "max")}, **boxplot_whiskers(ratios)}


def summarize(
    dataset_dir: Path,
    depths: Optional[Sequence[int]] = None,
    log_fn: LogFn = None,
) -> SummaryTable:
    """Per-depth ratio statistics, a GW row, boxplot and std-vs-depth plot data.

    Every requested depth must have a row for every instance in
    baselines.csv, otherwise GapError.
    """
    root = Path(dataset_dir)
    manifest_path = root / "manifest.json"
    mhash = load_json(manifest_path).get("manifest_sha256", "") if manifest_path.exists() else ""
    ds = _Dataset(root, mhash)
    if not ds.path("baselines.csv").exists() or not ds.path("runs.csv").exists():
        raise GapError(f"{root} has no baselines.csv/runs.csv to summarize")
    baselines = {row["instance_id"]: row for row in ds.rows("baselines.csv")}
    by_depth: Dict[int, Dict[str, Dict[str, str]]] = {}
    for row in ds.rows("runs.csv"):
        by_depth.setdefault(int(row["p"]), {})[row["instance_id"]] = row
    wanted = sorted(by_depth) if depths is None else sorted({int(p) for p in depths})
    for p in wanted:
        have = by_depth.get(p, {})
        missing = [iid for iid in baselines if iid not in have]
        if not have or missing:
            raise GapError(f"depth {p} is missing for {len(missing) or len(baselines)} instance(s)")

    gw_ratios = [float(b["gw_ratio"]) for b in baselines.values()]
    gw_stds = [float(b["gw_std_cost"]) / float(b["c_max"]) for b in baselines.values()]
    summary, boxplot, std_rows = [], [], []
    mean_stds: List[float] = []
    for p in wanted:
        rows = list(by_depth[p].values())
        ratios = [float(r["ratio"]) for r in rows]
        stds = [float(r["sample_std"]) for r in rows]
        mean_stds.append(float(np.mean(stds)))
        row = _stats_row(p, ratios, seed=p)
        row["pct_qaoa_beats_gw"] = 100.0 * float(np.mean([r["qaoa_beats_gw"] == "1" for r in rows]))
        row["mean_sample_std"] = mean_stds[-1]
        summary.append(row)
        boxplot.append(_box_row(p, ratios))
    gw_row = _stats_row("gw", gw_ratios, seed=0)
    gw_row["mean_sample_std"] = float(np.mean(gw_stds))
    summary.append(gw_row)
    boxplot.append(_box_row("gw", gw_ratios))

    fit = None
    positive = [(p, s) for p, s in zip(wanted, mean_stds) if s > 0]
    if len({p for p, _ in positive}) >= 2:
        fit = fit_log_depth([p for p, _ in positive], [s for _, s in positive], reference_std=float(np.mean(gw_stds)))
    for p, s in zip(wanted, mean_stds):
        std_rows.append(
            {
                "depth": p,
                "mean_sample_std": s,
                "gw_mean_std": float(np.mean(gw_stds)),
                "fit_a": fit.a if fit else None,
                "fit_b": fit.b if fit else None,
                "crossing_depth": fit.crossing_depth if fit else None,
            }
        )

    ds.write("summary.csv", SUMMARY_COLUMNS, summary)
    ds.write("boxplot.csv", BOXPLOT_COLUMNS, boxplot)
    ds.write("std_by_depth.csv", STD_COLUMNS, std_rows)
    if log_fn:
        for row in summary:
            log_fn(f"[experiment] depth {row['depth']}: min={row['min']:.4f} median={row['median']:.4f}")
    return SummaryTable(summary, boxplot, std_rows)


def load_manifest(path: Path, overrides: Optional[Dict[str, Any]] = None) -> ExperimentManifest:
    """Manifest from YAML/JSON; non-None overrides (CLI flags) win."""
    data = dict(load_yaml(path))
    data.pop("manifest_sha256", None)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentManifest.from_dict(data)
