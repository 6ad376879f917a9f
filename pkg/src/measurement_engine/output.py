"""CSV and JSON writers.

Energies are written in units of hbar*omega0 and entropies in units of k_B.
Floats are written with ``repr`` so identical runs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .continuous import TrajectoryRecord
from .discrete import CycleReport
from .distributions import DensityCurve, Histogram

CYCLE_PREFIX = ["omega0", "t_demon", "z0"]
TRAJECTORY_COLUMNS = [
    "index", "Q", "W_ext", "Q_M", "dS_M",
    "x_pre", "y_pre", "z_pre", "z_final", "log_likelihood",
]


class OutputError(OSError):
    pass


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return value


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit_reports(rows: list[tuple[float, float, float, CycleReport]], path) -> Path:
    """``rows`` holds ``(omega0, t_demon, z0, report)`` tuples."""
    header = CYCLE_PREFIX + CycleReport.columns()
    return write_csv(path, header, ([o, t, z] + rep.row() for o, t, z, rep in rows))


def emit_records(records: list[TrajectoryRecord], path) -> Path:
    def row(rec):
        pre = rec.pre_feedback
        return [rec.index, rec.Q, rec.W_ext, rec.Q_M, rec.dS_M,
                pre.x, pre.y, pre.z, rec.final_state.z, rec.log_likelihood]

    return write_csv(path, TRAJECTORY_COLUMNS, (row(r) for r in records))


def emit_curve(curve: DensityCurve, path) -> Path:
    cdf = curve.cdf()
    return write_csv(path, [curve.variable, "density", "cdf"], zip(curve.grid, curve.density, cdf))


def emit_histograms(items: list[tuple[str, Histogram, DensityCurve | None]], path) -> Path:
    """One row per bin; ``model_density`` is the curve's mean density over the bin."""
    rows = []
    for name, hist, curve in items:
        model = None
        if curve is not None:
            cdf_edges = np.interp(hist.edges, curve.grid, curve.cdf(), left=0.0, right=curve.cdf()[-1])
            model = np.diff(cdf_edges) / np.diff(hist.edges)
        for k in range(len(hist.counts)):
            rows.append([
                name, hist.edges[k], hist.edges[k + 1], int(hist.counts[k]), hist.density[k],
                math.nan if model is None else model[k],
            ])
    header = ["variable", "bin_left", "bin_right", "count", "density", "model_density"]
    return write_csv(path, header, rows)
