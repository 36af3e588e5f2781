"""CSV tables with '#' metadata headers and JSON sidecars."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return f"{x:.17g}"
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_csv(path: str | Path, header: list[str], rows, metadata: dict) -> Path:
    """Write a CSV with metadata comment lines and a ``<name>.meta.json`` sidecar.

    Numbers are written with 17 significant digits so that they round-trip.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = _jsonable(metadata)
    lines = [f"# {k}: {json.dumps(meta[k], sort_keys=True)}" for k in sorted(meta) if k != "quarantine"]
    lines.append(f"# quarantine_count: {len(meta.get('quarantine', []))}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    sidecar = path.with_name(path.stem + ".meta.json")
    sidecar.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return path


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Header and numeric body of a CSV written by :func:`write_csv` (non-numeric cells become nan)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")

    def num(cell):
        try:
            return float(cell)
        except ValueError:
            return math.nan

    body = np.array([[num(c) for c in ln.split(",")] for ln in lines[1:]], dtype=float)
    return header, body.reshape(len(lines) - 1, len(header))


def read_metadata(path: str | Path) -> dict:
    path = Path(path)
    return json.loads(path.with_name(path.stem + ".meta.json").read_text())
