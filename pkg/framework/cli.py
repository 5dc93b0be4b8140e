"""Command line entry: `python scripts/maxcut_select.py <subcommand> ...`.

Exit codes: 0 success, 1 validation or usage error, 2 numerical/search failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from core.errors import MaxCutSelectError, ValidationError
from core.io import load_json, read_csv, save_json, write_csv
from core.logging import DualLogger
from core.seed import set_seed

from . import __version__
from .angles import AngleSearchConfig, attach_sample_std, optimize_dataset_angles
from .experiment import LABEL_COLUMNS, load_manifest, run_experiment, summarize
from .features import compute_features
from .graph import Graph, brute_force_max, generate_regular
from .gw import run_gw
from .qaoa import QaoaAngles, QaoaSimulator
from .selector import (
    CV_COLUMNS,
    DEFAULT_FEATURES,
    LabeledDataset,
    cross_validate,
    fit_pipeline_crit1,
    fit_pipeline_crit2,
    label_criterion1,
    label_criterion2,
    load_model,
    partial_dependence,
    permutation_importance,
    save_model,
)
from .utils import load_default_config, resolve


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1 instead of argparse's 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageError(message)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="Root random seed (default: config seed)")
    p.add_argument("--manifest", type=str, default=argparse.SUPPRESS, help="Experiment manifest (YAML/JSON)")
    p.add_argument("--out", type=str, default=argparse.SUPPRESS, help="Output file or directory")
    p.add_argument(
        "--threads",
        type=int,
        default=argparse.SUPPRESS,
        help="Worker threads for instance-level work (default: physical cores)",
    )
    p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="No console logging")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(
        prog="maxcut_select",
        description="QAOA vs Goemans-Williamson MaxCut algorithm selection",
        parents=[common],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help_text, parents=[common])

    p = add("generate", "Random connected regular graph(s) as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--count", type=int, default=1)

    p = add("oracle", "Exact MaxCut by brute force")
    p.add_argument("--graph", required=True)

    p = add("gw", "Goemans-Williamson statistics over m projections")
    p.add_argument("--graph", required=True)
    p.add_argument("--m", type=int, default=None)

    p = add("qaoa", "Optimize (or evaluate) depth-p QAOA angles for one graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--random_starts", type=int, default=None)
    p.add_argument("--budget", type=int, default=None, help="NM evaluations per start (default 400*2p)")
    p.add_argument("--gammas", type=str, default=None, help="Comma-separated; evaluate instead of optimizing")
    p.add_argument("--betas", type=str, default=None)
    p.add_argument("--samples", type=int, default=None)

    p = add("features", "The 20 instance features of one graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--m", type=int, default=None)

    p = add("label", "Recompute labels.csv from a dataset's runs and baselines")
    p.add_argument("--dataset", required=True)
    p.add_argument("--p", type=int, default=None, help="Depth to label at (default: deepest)")

    p = add("summarize", "Summary, boxplot and std-by-depth CSVs of a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--depths", type=str, default=None, help="Comma-separated depths (default: all)")

    for name, help_text in (("train", "Fit a criterion pipeline"), ("cv", "Stratified k-fold cross-validation")):
        p = add(name, help_text)
        p.add_argument("--dataset", required=True)
        p.add_argument("--criterion", choices=["crit1", "crit2"], default="crit1")
        p.add_argument("--features", type=str, default=None, help="gw2 | efficient | cheap | all | name,name,...")
        if name == "train":
            p.add_argument("--model_out", type=str, default=None)
        else:
            p.add_argument("--folds", type=int, default=None)

    p = add("predict", "Label and P(label 1) per feature row")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)

    p = add("importance", "Permutation importance (balanced accuracy drop)")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--repeats", type=int, default=None)

    p = add("pdp", "Two-feature partial dependence grid")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--feat_a", required=True)
    p.add_argument("--feat_b", required=True)
    p.add_argument("--grid", type=int, default=None)

    add("run-all", "Generate a full dataset from --manifest")
    return parser


def _cfg(cfg: Dict[str, Any], section: str, key: str, default: Any) -> Any:
    value = (cfg.get(section) or {}).get(key)
    return default if value is None else value


def _read_graph(path: str) -> Graph:
    p = resolve(path)
    try:
        return Graph.from_dict(load_json(p))
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read graph {p}: {e}") from e


def _emit(obj: Any, out: Optional[str]) -> None:
    if out:
        save_json(obj, resolve(out))
    else:
        print(json.dumps(obj, indent=2))


def _emit_rows(header: Sequence[str], rows: List[Dict[str, Any]], out: Optional[str]) -> None:
    if out:
        write_csv(resolve(out), header, rows)
        return
    print(",".join(header))
    for row in rows:
        print(",".join("" if row.get(c) is None else str(row.get(c)) for c in header))


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from e


def _dataset(path: str) -> LabeledDataset:
    root = resolve(path)
    return LabeledDataset.from_csv(root / "features.csv", root / "labels.csv")


def _cmd_generate(args, cfg, log) -> int:
    seed = getattr(args, "seed", _cfg(cfg, "run", "seed", 0))
    graphs = [generate_regular(args.n, args.degree, seed + k) for k in range(args.count)]
    out = getattr(args, "out", None)
    if args.count == 1:
        _emit(graphs[0].to_dict(), out)
    else:
        _emit({"instances": {f"n{args.n:02d}_i{k:02d}": g.to_dict() for k, g in enumerate(graphs)}}, out)
    log.log(f"[generate] {args.count} graph(s), n={args.n}, degree={args.degree}, seed={seed}")
    return 0


def _cmd_oracle(args, cfg, log) -> int:
    g = _read_graph(args.graph)
    best = brute_force_max(g)
    _emit({"c_max": best.cost, "assignment": best.as_bits(), "z": best.z.tolist()}, getattr(args, "out", None))
    return 0


def _gw(args, cfg, log):
    g = _read_graph(args.graph)
    m = args.m or _cfg(cfg, "gw", "projections", 1000)
    sol, stats = run_gw(
        g,
        m=m,
        seed=getattr(args, "seed", _cfg(cfg, "run", "seed", 0)),
        tol=_cfg(cfg, "gw", "sdp_tol", 1e-8),
        max_iters=_cfg(cfg, "gw", "sdp_max_iters", 10_000),
        log_fn=log.log,
    )
    return g, sol, stats


def _cmd_gw(args, cfg, log) -> int:
    _, sol, stats = _gw(args, cfg, log)
    _emit(
        {
            "relaxed_cost": stats.relaxed_cost,
            "expected_cost": stats.expected_cost,
            "std_cost": stats.std_cost,
            "best_cost": stats.best_cost,
            "m": stats.m,
            "seed": stats.rng_seed,
            "converged": stats.converged,
            "sweeps": sol.sweeps,
        },
        getattr(args, "out", None),
    )
    return 0


def _cmd_qaoa(args, cfg, log) -> int:
    g = _read_graph(args.graph)
    sim = QaoaSimulator(g)
    c_max = brute_force_max(g).cost
    seed = getattr(args, "seed", _cfg(cfg, "run", "seed", 0))
    samples = args.samples or _cfg(cfg, "qaoa", "samples", 1000)
    if args.gammas is not None or args.betas is not None:
        if args.gammas is None or args.betas is None:
            raise ValidationError("--gammas and --betas go together")
        angles = QaoaAngles(tuple(_floats(args.gammas)), tuple(_floats(args.betas)))
        f_p = sim.expected_cost(angles)
        sample = sim.sample(angles, samples, seed)
        result = {"p": angles.p, "f_p": f_p, "ratio": f_p / c_max, "sample_std": sample.std / c_max}
    else:
        config = AngleSearchConfig(
            random_starts=args.random_starts or _cfg(cfg, "qaoa", "random_starts", 10),
            evaluations_per_start=args.budget or _cfg(cfg, "qaoa", "nm_budget", None),
            seed=seed,
            second_pass=False,
        )
        run = optimize_dataset_angles([g], args.p, [c_max], [0.0], config=config, simulators=[sim], log_fn=log.log)[0]
        run = attach_sample_std(run, sim, c_max, samples, seed)
        result = {
            "p": run.p,
            "f_p": run.f_p,
            "ratio": run.ratio,
            "sample_std": run.sample_std,
            "gammas": list(run.angles.gammas),
            "betas": list(run.angles.betas),
            "evaluations": run.evaluations,
            "budget_exhausted": run.budget_exhausted,
        }
    result["c_max"] = c_max
    _emit(result, getattr(args, "out", None))
    return 0


def _cmd_features(args, cfg, log) -> int:
    g, sol, stats = _gw(args, cfg, log)
    _emit(compute_features(g, sol, stats).to_dict(), getattr(args, "out", None))
    return 0


def _cmd_label(args, cfg, log) -> int:
    root = resolve(args.dataset)
    baselines = {row["instance_id"]: row for row in read_csv(root / "baselines.csv")}
    runs = read_csv(root / "runs.csv")
    depths = sorted({int(r["p"]) for r in runs})
    if not depths:
        raise ValidationError(f"{root / 'runs.csv'} has no rows")
    p_used = args.p or depths[-1]
    rows = []
    for r in sorted((r for r in runs if int(r["p"]) == p_used), key=lambda r: r["instance_id"]):
        q = float(r["ratio"])
        gw = float(baselines[r["instance_id"]]["gw_ratio"])
        rows.append(
            {
                "instance_id": r["instance_id"],
                "n": r["n"],
                "p_used": p_used,
                "qaoa_ratio": q,
                "gw_ratio": gw,
                "label_crit1": label_criterion1(q, gw),
                "label_crit2": label_criterion2(q, gw),
            }
        )
    _emit_rows(LABEL_COLUMNS, rows, getattr(args, "out", None))
    log.log(f"[label] {len(rows)} instances at p={p_used}")
    return 0


def _cmd_summarize(args, cfg, log) -> int:
    depths = [int(v) for v in _floats(args.depths)] if args.depths else None
    table = summarize(resolve(args.dataset), depths=depths, log_fn=log.log)
    for row in table.summary:
        print(f"{row['depth']}\tmin={row['min']:.4f}\tmedian={row['median']:.4f}\tcount={row['count']}")
    return 0


def _fit(criterion: str, ds: LabeledDataset, features: Optional[str], seed: int, log):
    if criterion == "crit1":
        return fit_pipeline_crit1(ds, features or DEFAULT_FEATURES["crit1"], seed=seed, log_fn=log.log)
    return fit_pipeline_crit2(ds, features or DEFAULT_FEATURES["crit2"], seed=seed, log_fn=log.log)


def _cmd_train(args, cfg, log) -> int:
    seed = getattr(args, "seed", _cfg(cfg, "run", "seed", 0))
    features = args.features or _cfg(cfg, "selector", f"{args.criterion}_features", None)
    model = _fit(args.criterion, _dataset(args.dataset), features, seed, log)
    out = args.model_out or getattr(args, "out", None) or str(resolve(args.dataset) / f"model_{args.criterion}.json")
    path = save_model(model, resolve(out))
    log.log(f"[train] {args.criterion} on {len(model.feature_names)} features -> {path}")
    return 0


def _cmd_cv(args, cfg, log) -> int:
    seed = getattr(args, "seed", _cfg(cfg, "run", "seed", 0))
    report = cross_validate(
        _dataset(args.dataset),
        args.criterion,
        features=args.features or _cfg(cfg, "selector", f"{args.criterion}_features", None),
        k=args.folds or _cfg(cfg, "selector", "folds", 4),
        seed=seed,
        log_fn=log.log,
    )
    _emit_rows(CV_COLUMNS, report.rows(), getattr(args, "out", None))
    log.log(f"[cv] {args.criterion}: mean balanced accuracy {report.mean_balanced_accuracy:.4f}")
    return 0


def _cmd_predict(args, cfg, log) -> int:
    model = load_model(resolve(args.model))
    rows = read_csv(resolve(args.features))
    try:
        X = np.asarray([[float(r[n]) for n in model.feature_names] for r in rows], dtype=float)
    except (KeyError, ValueError) as e:
        raise ValidationError(f"feature table does not match the model: {e}") from e
    X = X.reshape(len(rows), len(model.feature_names))
    labels = model.predict(X)
    proba = model.proba_positive(X)
    out = [
        {"instance_id": r.get("instance_id", str(k)), "label": int(labels[k]), "proba_1": float(proba[k])}
        for k, r in enumerate(rows)
    ]
    _emit_rows(["instance_id", "label", "proba_1"], out, getattr(args, "out", None))
    return 0


def _cmd_importance(args, cfg, log) -> int:
    model = load_model(resolve(args.model))
    rows = permutation_importance(
        model,
        _dataset(args.dataset),
        repeats=args.repeats or _cfg(cfg, "selector", "importance_repeats", 10),
        seed=getattr(args, "seed", _cfg(cfg, "run", "seed", 0)),
    )
    _emit_rows(["feature", "mean_drop", "std_drop"], rows, getattr(args, "out", None))
    return 0


def _cmd_pdp(args, cfg, log) -> int:
    model = load_model(resolve(args.model))
    rows = partial_dependence(
        model,
        _dataset(args.dataset),
        args.feat_a,
        args.feat_b,
        grid=args.grid or _cfg(cfg, "selector", "pdp_grid", 20),
    )
    _emit_rows([args.feat_a, args.feat_b, "mean_proba_1"], rows, getattr(args, "out", None))
    return 0


def _cmd_run_all(args, cfg, log) -> int:
    if not hasattr(args, "manifest"):
        raise ValidationError("run-all needs --manifest")
    manifest = load_manifest(
        resolve(args.manifest),
        {
            "seed_root": getattr(args, "seed", None),
            "output_dir": getattr(args, "out", None),
            "threads": getattr(args, "threads", None),
        },
    )
    root = resolve(manifest.output_dir)
    manifest.output_dir = str(root)
    with DualLogger(root, quiet=getattr(args, "quiet", False)) as run_log:
        run_experiment(manifest, log_fn=run_log.log, command_argv=list(sys.argv))
    failures = read_csv(root / "failures.csv")
    if failures:
        log.log(f"[run-all] {len(failures)} instance(s) failed, see {root / 'failures.csv'}")
        return 2
    return 0


COMMANDS = {
    "generate": _cmd_generate,
    "oracle": _cmd_oracle,
    "gw": _cmd_gw,
    "qaoa": _cmd_qaoa,
    "features": _cmd_features,
    "label": _cmd_label,
    "summarize": _cmd_summarize,
    "train": _cmd_train,
    "cv": _cmd_cv,
    "predict": _cmd_predict,
    "importance": _cmd_importance,
    "pdp": _cmd_pdp,
    "run-all": _cmd_run_all,
}


def cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except _UsageError:
        return 1
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1

    cfg = load_default_config()
    set_seed(getattr(args, "seed", _cfg(cfg, "run", "seed", 0)))
    with DualLogger(None, quiet=getattr(args, "quiet", False)) as log:
        try:
            return COMMANDS[args.command](args, cfg, log)
        except MaxCutSelectError as e:
            log.log(f"[{args.command}] {type(e).__name__}: {e}")
            return e.exit_code


def main() -> int:
    return cli(sys.argv[1:])
