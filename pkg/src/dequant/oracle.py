"""
Split-operator Schrödinger propagation as an independent check on the
phase-space engines.

Only ``H = p^2/(2m) + V(q)`` is supported; for that form each Strang factor
is exact (the potential is diagonal in position, the kinetic term diagonal
in momentum).
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .dynamics import Trajectory
from .symbolic import PolySymbol, phase
from .wigner import SpatialGrid, StateVector, observables, wigner_of_state

__all__ = [
    "NotSplitError",
    "SplitHamiltonian",
    "SplitPropagator",
    "split_operator_step",
    "oracle_wigner_trajectory",
    "refine_state",
    "downsample_state",
]


class NotSplitError(ValueError):
    """Hamiltonian is not of the form p^2/2m + V(q)."""


@dataclass(frozen=True)
class SplitHamiltonian:
    mass: float
    V: PolySymbol

    def __post_init__(self):
        if not self.mass > 0:
            raise NotSplitError("mass must be positive")
        if self.V.dim != 1:
            raise NotSplitError("the oracle is one-dimensional")
        if any(e[1] or any(e[2:]) for e in self.V.terms):
            raise NotSplitError("V must depend on q only")
        if not self.V.is_real():
            raise NotSplitError("V must have real coefficients")

    @classmethod
    def from_poly(cls, H: PolySymbol) -> "SplitHamiltonian":
        """Split ``H`` into ``c p^2 + V(q)``; anything else raises :class:`NotSplitError`."""
        if H.dim != 1:
            raise NotSplitError(f"need N = 1, got N = {H.dim}")
        kinetic = None
        vterms = {}
        for e, c in H.terms.items():
            if any(e[2:]):
                raise NotSplitError(f"H must not contain lambda or h: {H.render()}")
            if e[1] == 0:
                vterms[e] = c
            elif e[0] == 0 and e[1] == 2:
                kinetic = c
            else:
                raise NotSplitError(
                    f"H = {H.render()} is not of the form p^2/2m + V(q); the oracle needs a separable Hamiltonian"
                )
        if kinetic is None or not kinetic.is_real or kinetic.re <= 0:
            raise NotSplitError(f"H = {H.render()} has no positive p^2 term")
        return cls(1 / (2 * float(kinetic.re)), PolySymbol(1, vterms))

    def to_poly(self) -> PolySymbol:
        p2 = PolySymbol.variable(1, phase(1), 2)
        return p2.scale(1 / (2 * Fraction(self.mass).limit_denominator(10 ** 12))) + self.V

    def potential(self, q: np.ndarray) -> np.ndarray:
        return np.real(self.V.evaluate([q, np.zeros_like(q)]))

    def energy(self, psi: StateVector) -> float:
        g = psi.grid
        a = psi.amplitudes
        k = 2 * np.pi * sfft.fftfreq(g.n_points, g.dq)
        ak = sfft.fft(a)
        kin = np.sum((g.hbar * k) ** 2 / (2 * self.mass) * np.abs(ak) ** 2) / g.n_points * g.dq
        pot = np.sum(self.potential(g.q) * np.abs(a) ** 2) * g.dq
        return float(kin + pot)


class SplitPropagator:
    """Precomputed Strang factors for one ``(grid, H, dt)``."""

    def __init__(self, grid: SpatialGrid, H: SplitHamiltonian, dt: float):
        self.grid, self.H, self.dt = grid, H, dt
        hb = grid.hbar
        k = 2 * np.pi * sfft.fftfreq(grid.n_points, grid.dq)
        self.half_v = np.exp(-0.5j * dt * H.potential(grid.q) / hb)
        self.kinetic = np.exp(-1j * dt * (hb * k) ** 2 / (2 * H.mass) / hb)

    def __call__(self, amps: np.ndarray) -> np.ndarray:
        a = self.half_v * amps
        a = sfft.ifft(self.kinetic * sfft.fft(a))
        return self.half_v * a


def split_operator_step(psi: StateVector, H: SplitHamiltonian, dt: float) -> StateVector:
    """``exp(-iV dt/2h) exp(-iT dt/h) exp(-iV dt/2h) psi`` with T applied in Fourier space."""
    if dt == 0:
        return psi
    out = SplitPropagator(psi.grid, H, dt)(psi.amplitudes)
    return StateVector(psi.grid, out)


def refine_state(psi: StateVector, factor: int) -> StateVector:
    """Band-limited interpolation onto a grid ``factor`` times finer (odd factor)."""
    if factor == 1:
        return psi
    if factor < 1 or factor % 2 == 0:
        raise ValueError("refine factor must be an odd positive integer")
    g = psi.grid
    fine = SpatialGrid(g.n_points * factor, g.box_length, g.hbar)
    k = 2 * np.pi * sfft.fftfreq(g.n_points, g.dq)
    coeffs = sfft.fft(psi.amplitudes) / g.n_points
    x = fine.q - g.q[0]
    return StateVector.normalized(fine, np.exp(1j * np.outer(x, k)) @ coeffs)


def downsample_state(psi: StateVector, factor: int) -> StateVector:
    if factor == 1:
        return psi
    g = psi.grid
    coarse = SpatialGrid(g.n_points // factor, g.box_length, g.hbar)
    amps = psi.amplitudes[(factor - 1) // 2::factor]
    return StateVector.normalized(coarse, amps)


def oracle_wigner_trajectory(psi0: StateVector, H: SplitHamiltonian, dt: float, t_final: float,
                             stride: int = 1, *, refine: int = 1, substeps: int = 1,
                             keep_snapshots: bool = False, method: str = "midpoint") -> Trajectory:
    """
    Evolve ``psi0`` and record Wigner observables on the schedule used by
    :func:`dequant.dynamics.propagate` (same step count, same recorded steps).

    With ``refine > 1`` the state is propagated on a finer grid and
    downsampled to the grid of ``psi0`` before each Wigner transform. Each
    schedule step is split into ``substeps`` Strang steps, which shrinks the
    second-order splitting error without changing the recorded times.
    """
    if int(substeps) != substeps or substeps < 1:
        raise ValueError("substeps must be a positive integer")
    n_steps = max(1, math.ceil(t_final / dt - 1e-9))
    step = t_final / n_steps
    recs = list(range(0, n_steps + 1, stride))
    if recs[-1] != n_steps:
        recs.append(n_steps)
    record = set(recs)
    psi = refine_state(psi0, refine)
    prop = SplitPropagator(psi.grid, H, step / substeps)
    amps = psi.amplitudes
    times, obs, snaps = [], [], [] if keep_snapshots else None
    for s in range(n_steps + 1):
        if s in record:
            if s == 0:
                cur = psi0
            else:
                cur = downsample_state(StateVector.normalized(psi.grid, amps), refine)
            W = wigner_of_state(cur, method=method)
            times.append(s * step)
            obs.append(observables(W))
            if snaps is not None:
                snaps.append(W)
        if s == n_steps:
            break
        for _ in range(substeps):
            amps = prop(amps)
    meta = {"engine": "oracle", "dt": step, "n_steps": n_steps, "refine": refine, "substeps": substeps}
    return Trajectory(np.array(times), obs, snaps, meta)
