"""CSV tables and JSON run manifests."""

from __future__ import annotations

import csv
import json
import platform
import time
from pathlib import Path

import numpy as np

from .. import __version__
from .experiments import ExperimentResult


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    return x


def write_csv(rows: list[dict], path: Path) -> None:
    columns: list[str] = []
    for row in rows:
        columns.extend(c for c in row if c not in columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: "" if row.get(c) is None else row.get(c) for c in columns})


def manifest(result: ExperimentResult, elapsed: float | None = None) -> dict:
    grid = result.grid.as_dict() if result.grid else {}
    return {
        "kind": result.kind,
        "parameters": grid,
        "base_seed": grid.get("seed"),
        "seed_rule": "SeedSequence([base_seed, kind_code, *cell, trial])",
        "summary": result.summary,
        "versions": {
            "sketchsel": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "elapsed_seconds": elapsed,
    }


def write_result(result: ExperimentResult, out_dir: str | Path, elapsed: float | None = None) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{result.kind}.csv"
    json_path = out / f"{result.kind}.manifest.json"
    write_csv(result.rows, csv_path)
    json_path.write_text(json.dumps(manifest(result, elapsed), indent=2, default=_jsonable) + "\n")
    return csv_path, json_path
