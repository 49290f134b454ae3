"""
On-disk formats.

Grid data is raw little-endian float64, row-major with q as the slow index,
next to a JSON sidecar ``{n_points, box_length, hbar, kind, time}``. Complex
data (state amplitudes, complex symbols) is stored as interleaved real and
imaginary parts and flagged with ``"complex": true`` in the sidecar.
Trajectories are CSV files with one row per recorded step.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .wigner import GridSymbol, Observables, SpatialGrid, StateVector

__all__ = [
    "CSV_HEADER",
    "save_symbol",
    "load_symbol",
    "save_state",
    "load_state",
    "write_trajectory_csv",
    "read_trajectory_csv",
]

CSV_HEADER = ("t",) + Observables.FIELDS
_DTYPE = "<f8"


def _paths(path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix in (".bin", ".json"):
        p = p.with_suffix("")
    return p.with_suffix(".bin"), p.with_suffix(".json")


def _write(path, grid: SpatialGrid, data: np.ndarray, kind: str, time: float | None) -> Path:
    bin_path, meta_path = _paths(path)
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    is_complex = np.iscomplexobj(data)
    flat = np.ascontiguousarray(data)
    if is_complex:
        flat = flat.astype("<c16").view(_DTYPE)
    flat.astype(_DTYPE).tofile(bin_path)
    meta = dict(grid.to_dict(), kind=kind, time=time)
    if is_complex:
        meta["complex"] = True
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    return bin_path


def _read(path) -> tuple[SpatialGrid, np.ndarray, dict]:
    bin_path, meta_path = _paths(path)
    meta = json.loads(meta_path.read_text())
    grid = SpatialGrid(int(meta["n_points"]), float(meta["box_length"]), float(meta["hbar"]))
    raw = np.fromfile(bin_path, dtype=_DTYPE)
    if meta.get("complex"):
        raw = raw.view("<c16")
    return grid, raw, meta


def save_symbol(path, rho: GridSymbol, kind: str = "wigner", time: float | None = None) -> Path:
    """Write ``rho`` to ``path.bin`` plus ``path.json``; returns the binary path."""
    vals = rho.values
    if np.iscomplexobj(vals) and rho.max_imag() == 0:
        vals = np.real(vals)
    return _write(path, rho.grid, vals, kind, time)


def load_symbol(path) -> tuple[GridSymbol, dict]:
    grid, raw, meta = _read(path)
    n = grid.n_points
    if raw.size != n * n:
        raise ValueError(f"expected {n * n} values, found {raw.size}")
    return GridSymbol(grid, raw.reshape(n, n)), meta


def save_state(path, psi: StateVector, time: float | None = None) -> Path:
    return _write(path, psi.grid, psi.amplitudes, "state", time)


def load_state(path) -> tuple[StateVector, dict]:
    grid, raw, meta = _read(path)
    return StateVector(grid, raw.astype(complex)), meta


def write_trajectory_csv(path, times, records) -> Path:
    """One row ``t,norm,mean_q,mean_p,purity,negativity,min_value`` per record."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for t, obs in zip(times, records):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in obs.as_tuple()])
    return path


def read_trajectory_csv(path) -> tuple[np.ndarray, list[Observables]]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        times, recs = [], []
        for row in reader:
            vals = [float(x) for x in row]
            times.append(vals[0])
            recs.append(Observables(*vals[1:]))
    return np.array(times), recs
