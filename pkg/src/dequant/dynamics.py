"""
Time propagation of grid densities.

``engine="moyal"`` integrates ``d rho/dt = {H, rho}_mb`` and
``engine="liouville"`` integrates ``d rho/dt = {H, rho}_pb``. Both share one
explicit RK4 code path over :class:`~dequant.wigner.PhaseSpaceGenerator`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .io import write_trajectory_csv, save_symbol
from .symbolic import PolySymbol, partial_derivative, phase
from .wigner import (
    BOUNDARY_CELLS,
    BOUNDARY_TOL,
    BoundaryMassError,
    GridSymbol,
    Observables,
    PhaseSpaceGenerator,
    SpatialGrid,
    observables,
)

__all__ = [
    "ENGINES",
    "EvolutionConfig",
    "Trajectory",
    "InstabilityError",
    "make_generator",
    "rk4_step",
    "stability_bound",
    "harmonic_period",
    "default_dt",
    "propagate",
]

ENGINES = ("moyal", "liouville")
RK4_IMAG_LIMIT = 2 * math.sqrt(2)  # RK4 stability interval on the imaginary axis
NORM_DRIFT_LIMIT = 1e-3


class InstabilityError(RuntimeError):
    """Raised when the integrated norm drifts beyond :data:`NORM_DRIFT_LIMIT`."""


def make_generator(engine: str, H: PolySymbol, grid: SpatialGrid) -> PhaseSpaceGenerator:
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
    return PhaseSpaceGenerator(H, grid, quantum=(engine == "moyal"))


def stability_bound(engine: str, H: PolySymbol, grid: SpatialGrid, safety: float = 0.8) -> float:
    """Largest RK4 step guaranteed stable for the discrete generator, times ``safety``."""
    rad = make_generator(engine, H, grid).spectral_radius_bound()
    return math.inf if rad == 0 else safety * RK4_IMAG_LIMIT / rad


def harmonic_period(H: PolySymbol) -> float | None:
    """Period of the quadratic part of an N = 1 Hamiltonian, or None if not oscillatory."""
    q, p = phase(0), phase(1)
    hqq = complex(partial_derivative(H, q, 2).constant_term()).real
    hpp = complex(partial_derivative(H, p, 2).constant_term()).real
    hqp = complex(partial_derivative(partial_derivative(H, q), p).constant_term()).real
    det = hqq * hpp - hqp ** 2
    if det <= 0:
        return None
    return 2 * math.pi / math.sqrt(det)


def _probe_stable(gen: PhaseSpaceGenerator, dt: float, steps: int = 30, seed: int = 0) -> bool:
    # dry run on smooth noise: growth signals an eigenvalue outside the RK4 region
    rng = np.random.default_rng(seed)
    n = gen.grid.n_points
    x = rng.standard_normal((n, n))
    x /= np.linalg.norm(x)
    for _ in range(steps):
        x = _rk4(gen, x, dt)
    return bool(np.linalg.norm(x) <= 1 + 1e-6)


def default_dt(engine: str, H: PolySymbol, grid: SpatialGrid, probe: bool = True) -> float:
    """
    ``1/50`` of the harmonic period of the quadratic part of H (1/50 of a
    unit time if there is none), capped by :func:`stability_bound` and, if
    ``probe`` is set, halved until a short dry run stays bounded.
    """
    period = harmonic_period(H)
    dt = (period if period is not None else 1.0) / 50
    dt = min(dt, stability_bound(engine, H, grid))
    if probe:
        gen = make_generator(engine, H, grid)
        for _ in range(20):
            if _probe_stable(gen, dt):
                break
            dt /= 2
    return dt


@dataclass(frozen=True)
class EvolutionConfig:
    engine: str
    H: PolySymbol
    dt: float
    t_final: float
    grid: SpatialGrid
    snapshot_stride: int = 1
    keep_snapshots: bool = False
    boundary: str = "raise"

    def __post_init__(self):
        if self.boundary not in ("raise", "record"):
            raise ValueError("boundary must be 'raise' or 'record'")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final >= self.dt:
            raise ValueError("t_final must be at least dt")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be a positive integer")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.t_final / self.dt - 1e-9))

    @property
    def step(self) -> float:
        """Step actually taken so that ``n_steps * step == t_final``."""
        return self.t_final / self.n_steps

    def record_steps(self) -> list[int]:
        steps = list(range(0, self.n_steps + 1, self.snapshot_stride))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return steps

    def check_stability(self):
        bound = stability_bound(self.engine, self.H, self.grid, safety=1.0)
        if self.step > bound:
            raise ValueError(f"dt = {self.step:.3e} exceeds the RK4 stability bound {bound:.3e}")


@dataclass
class Trajectory:
    times: np.ndarray
    observables: list[Observables]
    snapshots: list[GridSymbol] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.observables):
            raise ValueError("one observable record per recorded time is required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def column(self, name: str) -> np.ndarray:
        if name == "t":
            return self.times
        return np.array([getattr(o, name) for o in self.observables])

    @property
    def mean_q(self) -> np.ndarray:
        return self.column("mean_q")

    def to_csv(self, path):
        return write_trajectory_csv(path, self.times, self.observables)

    def save_snapshots(self, directory, prefix: str = "snapshot") -> list:
        if not self.snapshots:
            return []
        return [save_symbol(f"{directory}/{prefix}_{i:04d}", s, kind="wigner", time=float(t))
                for i, (t, s) in enumerate(zip(self.times, self.snapshots))]


def _rk4(gen: Callable[[np.ndarray], np.ndarray], r: np.ndarray, dt: float) -> np.ndarray:
    k1 = gen(r)
    k2 = gen(r + 0.5 * dt * k1)
    k3 = gen(r + 0.5 * dt * k2)
    k4 = gen(r + dt * k3)
    return r + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_step(gen: PhaseSpaceGenerator, rho: GridSymbol, dt: float, check: bool = True) -> GridSymbol:
    """One classical fourth-order Runge-Kutta step of ``d rho/dt = gen(rho)``."""
    if dt == 0:
        return rho
    if check:
        gen.apply(rho, check=True)  # raises on boundary mass before stepping
    return GridSymbol(rho.grid, _rk4(gen, np.real(rho.values), dt))


def _edge_mask(n: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=bool)
    c = BOUNDARY_CELLS
    m[:c, :] = m[-c:, :] = True
    m[:, :c] = m[:, -c:] = True
    return m


def propagate(cfg: EvolutionConfig, rho0: GridSymbol,
              progress: Callable[[int, int], None] | None = None) -> Trajectory:
    """
    Integrate from 0 to ``cfg.t_final`` in ``cfg.n_steps`` equal steps.

    Observables are recorded at step 0, every ``snapshot_stride`` steps and
    at the final step. Raises :class:`BoundaryMassError` when the density
    reaches the box edge (unless ``cfg.boundary == "record"``, which only
    stores the largest edge mass in ``meta``) and :class:`InstabilityError`
    on norm drift.
    """
    if rho0.grid != cfg.grid:
        raise ValueError("rho0 is not on the configured grid")
    gen = make_generator(cfg.engine, cfg.H, cfg.grid)
    mask = _edge_mask(cfg.grid.n_points)
    cell = cfg.grid.cell
    r = np.array(np.real(rho0.values), dtype=float)
    norm0 = float(np.sum(r) * cell)
    dt = cfg.step
    record = set(cfg.record_steps())
    times, obs, snaps = [], [], [] if cfg.keep_snapshots else None
    max_edge = 0.0

    def guard(step: int):
        nonlocal max_edge
        edge = float(np.sum(np.abs(r[mask])) * cell)
        max_edge = max(max_edge, edge)
        if edge > BOUNDARY_TOL and cfg.boundary == "raise":
            raise BoundaryMassError(
                f"{cfg.engine}: boundary mass {edge:.3e} exceeds {BOUNDARY_TOL:.0e} at t = {step * dt:.6g}; "
                "enlarge the box or shorten the run"
            )
        drift = abs(float(np.sum(r) * cell) - norm0)
        if not drift <= NORM_DRIFT_LIMIT:
            raise InstabilityError(
                f"{cfg.engine}: norm drift {drift:.3e} at step {step} (t = {step * dt:.6g}, dt = {dt:.3e}); "
                "reduce dt below the stability bound"
            )

    for step in range(cfg.n_steps + 1):
        guard(step)
        if step in record:
            sym = GridSymbol(cfg.grid, r.copy())
            times.append(step * dt)
            obs.append(observables(sym))
            if snaps is not None:
                snaps.append(sym)
        if step == cfg.n_steps:
            break
        r = _rk4(gen, r, dt)
        if progress is not None:
            progress(step + 1, cfg.n_steps)
    meta = {"engine": cfg.engine, "dt": dt, "n_steps": cfg.n_steps, "H": cfg.H.render(),
            "max_boundary_mass": max_edge}
    return Trajectory(np.array(times), obs, snaps, meta)
