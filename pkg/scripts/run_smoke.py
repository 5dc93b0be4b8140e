#!/usr/bin/env python3
"""Smoke run: configs/smoke.yaml end to end, then dataset validation and a crit1 CV."""
import argparse
import sys
from datetime import datetime
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from core import DualLogger, MaxCutSelectError, set_seed
from datasets.regular_maxcut.validate import validate_dataset_dir
from framework.experiment import load_manifest, run_experiment
from framework.selector import LabeledDataset, cross_validate
from framework.utils import RUNS_DIR


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--manifest", type=str, default=str(ROOT / "configs" / "smoke.yaml"))
    ap.add_argument("--out", type=str, default=None)
    args = ap.parse_args()

    exp_id = f"smoke_{datetime.now().strftime('%Y%m%d_%H%M%S')}"
    out = Path(args.out) if args.out else RUNS_DIR / exp_id
    manifest = load_manifest(Path(args.manifest), {"output_dir": str(out)})
    set_seed(manifest.seed_root)

    with DualLogger(out, "run.log") as logger:
        logger.log("Smoke run started")
        try:
            run_experiment(manifest, log_fn=logger.log, command_argv=list(sys.argv))
        except MaxCutSelectError as e:
            logger.log(f"Smoke run failed: {type(e).__name__}: {e}")
            return e.exit_code

        report = validate_dataset_dir(out)
        logger.log(f"Validated {report['instances']} instances / {report['runs']} runs: ok={report['ok']}")
        for err in report["errors"]:
            logger.log(f"  {err}")
        if not report["ok"]:
            return 1

        ds = LabeledDataset.from_csv(out / "features.csv", out / "labels.csv")
        counts = [int((ds.label_crit1 == c).sum()) for c in (0, 1)]
        logger.log(f"crit1 label counts: {counts}")
        try:
            cv = cross_validate(ds, "crit1", k=min(4, min(counts)) if min(counts) >= 2 else 4, seed=manifest.seed_root)
            logger.log(f"crit1 CV balanced accuracy: {cv.mean_balanced_accuracy:.4f}")
        except MaxCutSelectError as e:
            # too few instances of one class at smoke scale
            logger.log(f"crit1 CV skipped: {e}")
        logger.log("Smoke run completed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
