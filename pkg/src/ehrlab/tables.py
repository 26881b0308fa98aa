"""CSV writers/readers for trajectories and balance residuals.

Values are written with 17 significant digits so a parse reproduces every
float64 bit-exactly.  All writes are atomic (temp file + rename).
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .observables import TrajectoryRecord

TRAJECTORY_HEADER = ",".join(TrajectoryRecord.columns())
RESIDUAL_HEADER = "t,res_E_int,res_P_int,res_P_point,res_P_corr"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _atomic_write_text(path: Path, text: str):
    tmp = path.with_name(path.name + f".tmp-{os.getpid()}")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc


def write_timeseries(records, path) -> Path:
    """trajectory.csv: one row per sampled TrajectoryRecord."""
    if not records:
        raise ValueError("refusing to write an empty trajectory")
    path = Path(path)
    lines = [TRAJECTORY_HEADER]
    for rec in records:
        lines.append(",".join(_fmt(v) for v in rec.row()))
    _atomic_write_text(path, "\n".join(lines) + "\n")
    return path


def read_timeseries(path):
    """Parse trajectory.csv back into a list of TrajectoryRecord."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != TRAJECTORY_HEADER:
        raise ValueError(f"{path}: unexpected trajectory header")
    records = []
    for line in lines[1:]:
        vals = [float(v) for v in line.split(",")]
        records.append(TrajectoryRecord(
            t=vals[0], xi=tuple(vals[1:4]), v=tuple(vals[4:7]), p=tuple(vals[7:10]),
            energy=vals[10], charge=vals[11], dipole=tuple(vals[12:15]),
            neg_freq_fraction=vals[15],
        ))
    return records


def write_residuals(samples, path) -> Path:
    """residuals.csv: per-sample residual magnitudes of the four balances."""
    path = Path(path)
    lines = [RESIDUAL_HEADER]
    for s in samples:
        res_e = abs(s.den_dt_numeric - s.power_integral)
        res_p = float(np.linalg.norm(s.dp_dt_numeric - s.force_integral))
        res_pt = float(np.linalg.norm(s.dp_dt_numeric - s.force_point))
        res_pc = float(np.linalg.norm(
            s.dp_dt_numeric - s.force_point - s.force_corrected))
        lines.append(",".join(_fmt(v) for v in (s.t, res_e, res_p, res_pt, res_pc)))
    _atomic_write_text(path, "\n".join(lines) + "\n")
    return path


def read_residuals(path):
    """Parse residuals.csv into a dict of column arrays."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != RESIDUAL_HEADER:
        raise ValueError(f"{path}: unexpected residuals header")
    cols = RESIDUAL_HEADER.split(",")
    data = {c: [] for c in cols}
    for line in lines[1:]:
        for c, v in zip(cols, line.split(",")):
            data[c].append(float(v))
    return {c: np.asarray(v) for c, v in data.items()}


def write_text(path, text: str) -> Path:
    """Atomic plain-text write (report.txt, defaults.txt, diagnostics)."""
    path = Path(path)
    _atomic_write_text(path, text)
    return path
