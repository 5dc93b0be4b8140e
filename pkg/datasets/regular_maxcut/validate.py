"""Dataset-directory validation for `regular_maxcut`."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List

from core.io import load_json, read_csv, read_provenance
from framework.selector import label_criterion1, label_criterion2

from .schema import TABLES, validate_baseline_dict, validate_run_dict


def validate_dataset_dir(root: Path | str) -> Dict[str, object]:
    """Re-check a dataset directory written by run-all.

    Returns
    -------
    dict
        {"ok": bool, "errors": [str, ...], "instances": int, "runs": int}
        Checks: every table exists and carries the manifest hash; baseline
        and run rows are in range; labels are recomputable from runs and
        baselines at the recorded depth.
    """
    root = Path(root)
    errors: List[str] = []
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        return {"ok": False, "errors": ["manifest.json missing"], "instances": 0, "runs": 0}
    mhash = load_json(manifest_path).get("manifest_sha256")

    for name in TABLES:
        path = root / name
        if not path.exists():
            errors.append(f"{name} missing")
            continue
        if read_provenance(path).get("manifest_sha256") != mhash:
            errors.append(f"{name} provenance does not match manifest.json")
    if errors:
        return {"ok": False, "errors": errors, "instances": 0, "runs": 0}

    baselines = {}
    for row in read_csv(root / "baselines.csv"):
        ok, msg = validate_baseline_dict(row)
        if not ok:
            errors.append(f"baselines.csv {row.get('instance_id')}: {msg}")
        baselines[row["instance_id"]] = row

    runs = {}
    for row in read_csv(root / "runs.csv"):
        ok, msg = validate_run_dict(row)
        if not ok:
            errors.append(f"runs.csv {row.get('instance_id')} p={row.get('p')}: {msg}")
            continue
        runs[(row["instance_id"], int(row["p"]))] = row

    for row in read_csv(root / "labels.csv"):
        iid, p = row["instance_id"], int(row["p_used"])
        run = runs.get((iid, p))
        if run is None or iid not in baselines:
            errors.append(f"labels.csv {iid}: no run at p={p} or no baseline")
            continue
        q, g = float(run["ratio"]), float(baselines[iid]["gw_ratio"])
        if int(row["label_crit1"]) != label_criterion1(q, g) or int(row["label_crit2"]) != label_criterion2(q, g):
            errors.append(f"labels.csv {iid}: labels are not recomputable from runs.csv")

    return {"ok": not errors, "errors": errors, "instances": len(baselines), "runs": len(runs)}
