"""
Numerical Weyl-Wigner layer on a periodic N = 1 phase-space grid.

Grid conventions
----------------
``q_j = (j - n//2) dq`` with ``dq = L/n`` and ``p_k = (k - n//2) dp`` with
``dp = 2 pi hbar / L``, so that ``n dq dp = 2 pi hbar``. Symbols are indexed
``values[j, k]`` (q-major). Operators are matrices in the orthonormal grid
position basis, so operator products are plain matrix products.

Weyl transform
--------------
On an odd lattice the half step ``s/2`` is the index ``s * (n+1)/2 mod n``,
which makes :func:`weyl_symbol` / :func:`weyl_quantize` an exact inverse
pair and a homomorphism for the grid star product. The lattice places half
of a localized state's weight at the usual Wigner location and the rest in
aliased images, so :func:`wigner_of_state` defaults to the midpoint
construction (band-limited interpolation of psi to half cells), which
samples the continuum Wigner function instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .symbolic import PolySymbol, partial_derivative, phase

__all__ = [
    "SpatialGrid",
    "StateVector",
    "OperatorMatrix",
    "GridSymbol",
    "Observables",
    "BoundaryMassError",
    "PhaseSpaceGenerator",
    "weyl_symbol",
    "weyl_quantize",
    "wigner_of_state",
    "grid_star",
    "grid_moyal_rhs",
    "grid_liouville_rhs",
    "observables",
    "boundary_mass",
    "sample_poly",
    "coherent_state",
    "oscillator_eigenstate",
    "gaussian_wigner",
]

NORM_TOL = 1e-12
BOUNDARY_CELLS = 3
BOUNDARY_TOL = 1e-10


class BoundaryMassError(RuntimeError):
    """Density reaches the edge of the periodic box."""


@dataclass(frozen=True)
class SpatialGrid:
    n_points: int
    box_length: float
    hbar: float = 1.0

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 1:
            raise ValueError("n_points must be a positive integer")
        if not self.box_length > 0 or not self.hbar > 0:
            raise ValueError("box_length and hbar must be positive")

    @property
    def dq(self) -> float:
        return self.box_length / self.n_points

    @property
    def dp(self) -> float:
        return 2 * math.pi * self.hbar / self.box_length

    @property
    def center(self) -> int:
        return self.n_points // 2

    @property
    def q(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.center) * self.dq

    @property
    def p(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.center) * self.dp

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.q, self.p, indexing="ij")

    @property
    def cell(self) -> float:
        return self.dq * self.dp

    def require_odd(self):
        if self.n_points % 2 == 0:
            raise ValueError(f"the discrete Weyl transform needs an odd grid, got n={self.n_points}")

    def to_dict(self) -> dict:
        return {"n_points": int(self.n_points), "box_length": float(self.box_length), "hbar": float(self.hbar)}


def _same_grid(a: SpatialGrid, b: SpatialGrid):
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Wavefunction samples with ``sum |psi|^2 dq = 1``."""

    grid: SpatialGrid
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} amplitudes, got shape {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)
        if abs(self.norm() - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm = {self.norm():.15g})")

    @classmethod
    def normalized(cls, grid: SpatialGrid, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        nrm = math.sqrt(float(np.sum(np.abs(amps) ** 2)) * grid.dq)
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(grid, amps / nrm)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dq)

    def density_matrix(self) -> "OperatorMatrix":
        v = self.amplitudes * math.sqrt(self.grid.dq)
        return OperatorMatrix(self.grid, np.outer(v, v.conj()))

    def expectation_q(self) -> float:
        return float(np.sum(self.grid.q * np.abs(self.amplitudes) ** 2) * self.grid.dq)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    grid: SpatialGrid
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        n = self.grid.n_points
        if e.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got {e.shape}")
        object.__setattr__(self, "entries", e)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _same_grid(self.grid, other.grid)
        return OperatorMatrix(self.grid, self.entries @ other.entries)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    @classmethod
    def identity(cls, grid: SpatialGrid) -> "OperatorMatrix":
        return cls(grid, np.eye(grid.n_points))

    @classmethod
    def position(cls, grid: SpatialGrid) -> "OperatorMatrix":
        return cls(grid, np.diag(grid.q).astype(complex))


@dataclass(frozen=True, eq=False)
class GridSymbol:
    """Phase-space function sampled on ``grid``; ``values[j, k] = f(q_j, p_k)``."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        n = self.grid.n_points
        if v.shape != (n, n):
            raise ValueError(f"expected {n}x{n} values, got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def max_imag(self) -> float:
        return float(np.max(np.abs(np.imag(self.values)), initial=0.0))

    def real(self) -> "GridSymbol":
        return GridSymbol(self.grid, np.real(self.values).astype(float))

    def integral(self) -> complex | float:
        return np.sum(self.values) * self.grid.cell


# ---------------------------------------------------------------------------
# discrete Weyl transform
# ---------------------------------------------------------------------------

def _half_step_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    half = (n + 1) // 2  # inverse of 2 mod n
    j = np.arange(n)[:, None]
    s = np.arange(n)[None, :]
    return (j + s * half) % n, (j - s * half) % n


def weyl_symbol(O: OperatorMatrix) -> GridSymbol:
    """
    ``O(q_j, p_k) = sum_s exp(-i p_k s dq / hbar) <q_j + s dq/2| O |q_j - s dq/2>``

    with half steps taken on the odd lattice. The identity maps to 1 and the
    position operator to ``q_j``.
    """
    grid = O.grid
    grid.require_odd()
    rows, cols = _half_step_indices(grid.n_points)
    G = O.entries[rows, cols]
    return GridSymbol(grid, sfft.fftshift(sfft.fft(G, axis=1), axes=1))


def weyl_quantize(A: GridSymbol) -> OperatorMatrix:
    """Exact inverse of :func:`weyl_symbol`."""
    grid = A.grid
    grid.require_odd()
    n = grid.n_points
    G = sfft.ifft(sfft.ifftshift(np.asarray(A.values, dtype=complex), axes=1), axis=1)
    rows, cols = _half_step_indices(n)
    out = np.empty((n, n), dtype=complex)
    out[rows, cols] = G
    return OperatorMatrix(grid, out)


def grid_star(A: GridSymbol, B: GridSymbol) -> GridSymbol:
    """Star product defined through ``symb(quantize(A) @ quantize(B))``."""
    _same_grid(A.grid, B.grid)
    return weyl_symbol(weyl_quantize(A) @ weyl_quantize(B))


def wigner_of_state(psi: StateVector, method: str = "midpoint") -> GridSymbol:
    """
    Wigner function of a pure state, normalized to ``sum rho dq dp = 1``.

    Parameters
    ----------
    psi : StateVector
        Normalized wavefunction on an odd grid.
    method : {"midpoint", "lattice"}
        ``"midpoint"`` evaluates psi at half-cell points by band-limited
        Fourier interpolation and samples the continuum Wigner function.
        ``"lattice"`` returns ``weyl_symbol(|psi><psi|) / (2 pi hbar)``
        exactly, aliased images included.

    Both choices reproduce the position and momentum marginals exactly and
    give purity 1 for a well-resolved state.
    """
    grid = psi.grid
    grid.require_odd()
    if abs(psi.norm() - 1.0) > NORM_TOL:
        raise ValueError("wigner_of_state needs a normalized state")
    twopih = 2 * math.pi * grid.hbar
    if method == "lattice":
        W = weyl_symbol(psi.density_matrix()).values / twopih
        return GridSymbol(grid, np.real(W))
    if method != "midpoint":
        raise ValueError(f"unknown method {method!r}")
    n, c, dq = grid.n_points, grid.center, grid.dq
    amps = psi.amplitudes
    k = 2 * np.pi * sfft.fftfreq(n, dq)
    half = sfft.ifft(sfft.fft(amps) * np.exp(0.5j * k * dq))  # psi(q_j + dq/2)
    j = np.arange(n)[:, None]
    s = np.arange(-c, c + 1)[None, :]
    t = s // 2
    even = (s % 2) == 0
    G = np.where(
        even,
        amps[(j + t) % n] * np.conj(amps[(j - t) % n]),
        half[(j + t) % n] * np.conj(half[(j - t - 1) % n]),
    )
    Gm = np.empty_like(G)
    Gm[:, s[0] % n] = G
    W = sfft.fftshift(sfft.fft(Gm, axis=1), axes=1) * dq / twopih
    return GridSymbol(grid, np.real(W))


# ---------------------------------------------------------------------------
# analytic states
# ---------------------------------------------------------------------------

def coherent_state(grid: SpatialGrid, q0: float, p0: float, sigma_q: float | None = None) -> StateVector:
    """Minimum-uncertainty Gaussian; ``sigma_q`` defaults to ``sqrt(hbar/2)``."""
    if sigma_q is None:
        sigma_q = math.sqrt(grid.hbar / 2)
    q = grid.q
    amps = np.exp(-((q - q0) ** 2) / (4 * sigma_q ** 2) + 1j * p0 * q / grid.hbar)
    return StateVector.normalized(grid, amps)


def gaussian_wigner(grid: SpatialGrid, q0: float, p0: float, sigma_q: float | None = None) -> GridSymbol:
    """Closed-form Wigner function of :func:`coherent_state`."""
    if sigma_q is None:
        sigma_q = math.sqrt(grid.hbar / 2)
    sigma_p = grid.hbar / (2 * sigma_q)
    Q, P = grid.mesh()
    vals = np.exp(-((Q - q0) ** 2) / (2 * sigma_q ** 2) - ((P - p0) ** 2) / (2 * sigma_p ** 2))
    return GridSymbol(grid, vals / (math.pi * grid.hbar))


def oscillator_eigenstate(grid: SpatialGrid, level: int, omega: float = 1.0, mass: float = 1.0) -> StateVector:
    """Harmonic-oscillator eigenfunction ``H_n(x) exp(-x^2/2)`` with ``x = q sqrt(m w/hbar)``."""
    x = grid.q * math.sqrt(mass * omega / grid.hbar)
    coeffs = np.zeros(level + 1)
    coeffs[level] = 1.0
    amps = np.polynomial.hermite.hermval(x, coeffs) * np.exp(-x ** 2 / 2)
    return StateVector.normalized(grid, amps)


def sample_poly(P: PolySymbol, grid: SpatialGrid) -> GridSymbol:
    """Sample a phase polynomial (hbar set to the grid value) on the grid."""
    if P.dim != 1:
        raise ValueError("grids are one-dimensional (N = 1)")
    Q, Pm = grid.mesh()
    hbar = grid.hbar if P.depends_on("hbar") else None
    return GridSymbol(grid, P.evaluate([Q, Pm], hbar=hbar))


# ---------------------------------------------------------------------------
# spectral right-hand sides
# ---------------------------------------------------------------------------

def boundary_mass(rho: GridSymbol, cells: int = BOUNDARY_CELLS) -> float:
    """``sum |rho| dq dp`` over the strip of ``cells`` cells along the box edge."""
    v = np.abs(rho.values)
    mask = np.zeros(v.shape, dtype=bool)
    mask[:cells, :] = mask[-cells:, :] = True
    mask[:, :cells] = mask[:, -cells:] = True
    return float(np.sum(v[mask]) * rho.grid.cell)


def check_boundary(rho: GridSymbol, tol: float = BOUNDARY_TOL):
    m = boundary_mass(rho)
    if m > tol:
        raise BoundaryMassError(
            f"density mass {m:.3e} within {BOUNDARY_CELLS} cells of the box edge exceeds {tol:.0e}; "
            "enlarge the box or shorten the run"
        )


class PhaseSpaceGenerator:
    """
    ``rho -> {H, rho}_mb`` (``quantum=True``) or ``{H, rho}_pb`` on a grid.

    Derivatives of the polynomial H are exact and sampled once; derivatives
    of rho are pseudo-spectral. For N = 1 the k-th bidifferential power is
    ``sum_j C(k,j) (-1)^j (d_q^{k-j} d_p^j H)(d_p^{k-j} d_q^j rho)``.
    """

    def __init__(self, H: PolySymbol, grid: SpatialGrid, quantum: bool = True):
        if H.dim != 1:
            raise ValueError("grid dynamics supports N = 1 only")
        if H.depends_on("lambda") or H.depends_on("hbar"):
            raise ValueError("H must depend on q and p only")
        if not H.is_real():
            raise ValueError("H must have real coefficients")
        self.H = H
        self.grid = grid
        self.quantum = quantum
        n = grid.n_points
        Q, P = grid.mesh()
        hbar = grid.hbar
        kmax = max(H.phase_degree(), 0) if quantum else 1
        coeffs: dict[tuple[int, int], np.ndarray] = {}
        # keys whose coefficient is constant along the differentiated axis
        separable: dict[tuple[int, int], bool] = {}
        for k in range(1, kmax + 1, 2):
            m = (k - 1) // 2
            ck = (-1) ** m * hbar ** (2 * m) / (4 ** m * math.factorial(k))
            for j in range(k + 1):
                dH = partial_derivative(partial_derivative(H, phase(0), k - j), phase(1), j)
                if dH.is_zero():
                    continue
                w = ck * math.comb(k, j) * (-1) ** j
                arr = w * np.broadcast_to(dH.evaluate([Q, P]), (n, n))
                key = (j, k - j)  # orders (d_q, d_p) applied to rho
                coeffs[key] = coeffs.get(key, 0) + arr
                q_only = all(e[1] == 0 for e in dH.terms)
                p_only = all(e[0] == 0 for e in dH.terms)
                sep = (key[0] == 0 and q_only) or (key[1] == 0 and p_only)
                separable[key] = separable.get(key, True) and sep
        self.coeffs = {key: np.ascontiguousarray(v, dtype=float) for key, v in coeffs.items()}
        kq = 2 * np.pi * sfft.fftfreq(n, grid.dq)[:, None]
        kp = 2 * np.pi * sfft.rfftfreq(n, grid.dp)[None, :]
        kq_half = 2 * np.pi * sfft.rfftfreq(n, grid.dq)[:, None]
        # p-derivatives with q-dependent coefficients fold into one transform pair
        # along p, and likewise for q; everything else takes the 2D route
        self._along_p = None
        self._along_q = None
        self._mixed = {}
        for key, c in self.coeffs.items():
            a, b = key
            if separable[key] and a == 0:
                term = c[:, :1] * (1j * kp) ** b
                self._along_p = term if self._along_p is None else self._along_p + term
            elif separable[key] and b == 0:
                term = c[:1, :] * (1j * kq_half) ** a
                self._along_q = term if self._along_q is None else self._along_q + term
            else:
                self._mixed[key] = (c, (1j * kq) ** a * (1j * kp) ** b)
        self._kq_max = float(np.max(np.abs(kq)))
        self._kp_max = float(np.max(np.abs(kp)))

    def __call__(self, values: np.ndarray) -> np.ndarray:
        n = self.grid.n_points
        out = np.zeros((n, n))
        Fp = None
        if self._along_p is not None or self._mixed:
            Fp = sfft.rfft(values, axis=1)
        if self._along_p is not None:
            out += sfft.irfft(self._along_p * Fp, n=n, axis=1)
        if self._along_q is not None:
            out += sfft.irfft(self._along_q * sfft.rfft(values, axis=0), n=n, axis=0)
        if self._mixed:
            F = sfft.fft(Fp, axis=0)
            for c, mult in self._mixed.values():
                out += c * sfft.irfft2(mult * F, s=(n, n))
        return out

    def spectral_radius_bound(self) -> float:
        """Upper bound on the magnitude of the discrete operator's eigenvalues."""
        return sum(float(np.max(np.abs(c))) * self._kq_max ** a * self._kp_max ** b
                   for (a, b), c in self.coeffs.items())

    def apply(self, rho: GridSymbol, check: bool = True) -> GridSymbol:
        _same_grid(rho.grid, self.grid)
        if rho.is_complex and rho.max_imag() > 1e-12:
            raise ValueError("rho must be real")
        if check:
            check_boundary(rho)
        return GridSymbol(self.grid, self(np.real(rho.values)))


def grid_moyal_rhs(H: PolySymbol, rho: GridSymbol, check_boundary: bool = True) -> GridSymbol:
    """``{H, rho}_mb`` on the grid; the sine series stops at ``2n+1 <= deg H``."""
    return PhaseSpaceGenerator(H, rho.grid, quantum=True).apply(rho, check_boundary)


def grid_liouville_rhs(H: PolySymbol, rho: GridSymbol, check_boundary: bool = True) -> GridSymbol:
    """``{H, rho}_pb`` on the grid."""
    return PhaseSpaceGenerator(H, rho.grid, quantum=False).apply(rho, check_boundary)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Observables:
    norm: float
    mean_q: float
    mean_p: float
    purity: float
    negativity: float
    min_value: float

    FIELDS = ("norm", "mean_q", "mean_p", "purity", "negativity", "min_value")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in self.FIELDS)


def observables(rho: GridSymbol) -> Observables:
    g = rho.grid
    v = np.real(rho.values)
    Q, P = g.mesh()
    cell = g.cell
    return Observables(
        norm=float(np.sum(v) * cell),
        mean_q=float(np.sum(Q * v) * cell),
        mean_p=float(np.sum(P * v) * cell),
        purity=float(2 * math.pi * g.hbar * np.sum(v * v) * cell),
        negativity=float(np.sum(np.abs(v) - v) * cell),
        min_value=float(np.min(v)),
    )
