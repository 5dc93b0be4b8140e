"""I/O utilities: JSON documents and provenance-stamped CSV tables."""
import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence


def load_json(path: Path) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def save_json(obj: Any, path: Path, sort_keys: bool = False) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(obj, f, indent=2, ensure_ascii=False, sort_keys=sort_keys)
        f.write("\n")


def format_cell(value: Any) -> str:
    """CSV cell text; floats use repr so they read back bit-exact."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, (list, tuple)):
        return ";".join(format_cell(v) for v in value)
    # numpy scalars
    if hasattr(value, "item"):
        return format_cell(value.item())
    return str(value)


def provenance_line(provenance: Mapping[str, Any]) -> str:
    return "# " + " ".join(f"{k}={provenance[k]}" for k in provenance)


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Mapping[str, Any]],
    provenance: Optional[Mapping[str, Any]] = None,
) -> None:
    """Write dict rows under `header`; an optional provenance comment comes first."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        if provenance:
            f.write(provenance_line(provenance) + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_cell(row.get(col)) for col in header])


def read_csv(path: Path) -> List[Dict[str, str]]:
    """Rows as dicts of strings; '#' comment lines are skipped."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))


def read_provenance(path: Path) -> Dict[str, str]:
    """Parse the leading '# key=value ...' line of a CSV written by write_csv."""
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    if not first.startswith("#"):
        return {}
    out: Dict[str, str] = {}
    for token in first[1:].split():
        if "=" in token:
            key, value = token.split("=", 1)
            out[key] = value
    return out
