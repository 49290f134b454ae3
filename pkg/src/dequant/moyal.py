"""
Symbolic Moyal calculus and the Grassmann dequantisation pipeline.

Conventions
-----------
Evolution equations are ``d rho/dt = {H, rho}_mb`` (quantum) and
``d rho/dt = {H, rho}_pb`` (classical). The Moyal bracket is evaluated by
its full bidifferential sine series, which terminates for polynomials.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Sequence

from .grassmann import GrassmannElement, berezin_integrate, grassmann_shift_eval
from .parser import parse_poly
from .symbolic import (
    CRational,
    DimensionMismatch,
    HBAR,
    PolySymbol,
    SymplecticForm,
    lam,
    partial_derivative,
    phase,
    shift_substitute,
)

__all__ = [
    "MARINOV_PREFACTOR",
    "ExtendedHamiltonian",
    "DequantReport",
    "bidifferential_power",
    "star_product",
    "moyal_bracket",
    "poisson_bracket",
    "liouville_rhs",
    "quantum_liouville_rhs",
    "hbar2_correction",
    "marinov_hamiltonian",
    "classical_extended_hamiltonian",
    "dequantise",
    "lambda_to_operator",
]

#: the ``1/2`` in ``(1/2hbar)[H(phi - hbar w lambda) - H(phi + hbar w lambda)]``
MARINOV_PREFACTOR = Fraction(1, 2)


# ---------------------------------------------------------------------------
# bidifferential kernel
# ---------------------------------------------------------------------------

class _Derivatives:
    """Memoised mixed phase-space derivatives of one polynomial."""

    def __init__(self, P: PolySymbol):
        self.P = P
        self.n = 2 * P.dim
        self.cache = {(0,) * self.n: P}

    def __call__(self, alpha: tuple) -> PolySymbol:
        got = self.cache.get(alpha)
        if got is not None:
            return got
        a = next(i for i, k in enumerate(alpha) if k)
        lower = alpha[:a] + (alpha[a] - 1,) + alpha[a + 1:]
        base = self(lower)
        out = base if base.is_zero() else partial_derivative(base, phase(a))
        self.cache[alpha] = out
        return out


def _check_dims(A: PolySymbol, B: PolySymbol):
    if A.dim != B.dim:
        raise DimensionMismatch(f"N={A.dim} vs N={B.dim}")


def bidifferential_power(A: PolySymbol, B: PolySymbol, k: int,
                         _dA: _Derivatives | None = None,
                         _dB: _Derivatives | None = None) -> PolySymbol:
    """
    ``A (<-d_a w^{ab} ->d_b)^k B``.

    The k-fold contraction is grouped by how many times each nonzero entry of
    the symplectic matrix is used; each group carries its multinomial weight.
    """
    _check_dims(A, B)
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return A * B
    dim = A.dim
    n = 2 * dim
    dA = _dA or _Derivatives(A)
    dB = _dB or _Derivatives(B)
    if A.phase_degree() < k or B.phase_degree() < k:
        return PolySymbol.zero(dim)
    entries = SymplecticForm(dim).nonzero()
    out = PolySymbol.zero(dim)
    kfact = math.factorial(k)
    for choice in combinations_with_replacement(range(len(entries)), k):
        counts = [0] * len(entries)
        for c in choice:
            counts[c] += 1
        alpha = [0] * n
        beta = [0] * n
        weight = kfact
        for (a, b, w), m in zip(entries, counts):
            if m:
                alpha[a] += m
                beta[b] += m
                weight //= math.factorial(m)
                if w < 0 and m % 2:
                    weight = -weight
        left = dA(tuple(alpha))
        if left.is_zero():
            continue
        right = dB(tuple(beta))
        if right.is_zero():
            continue
        out = out + (left * right).scale(weight)
    return out


def _hbar_power(dim: int, k: int) -> PolySymbol:
    return PolySymbol.variable(dim, HBAR, k)


def star_product(A: PolySymbol, B: PolySymbol) -> PolySymbol:
    """``A exp[(i hbar/2) <-d_a w^{ab} ->d_b] B`` with hbar formal."""
    _check_dims(A, B)
    dA, dB = _Derivatives(A), _Derivatives(B)
    kmax = min(A.phase_degree(), B.phase_degree())
    half_i = CRational(0, Fraction(1, 2))
    out = PolySymbol.zero(A.dim)
    for k in range(max(kmax, 0) + 1):
        term = bidifferential_power(A, B, k, dA, dB)
        if term.is_zero():
            continue
        coef = half_i ** k / math.factorial(k)
        out = out + (term * _hbar_power(A.dim, k)).scale(coef)
    return out


def moyal_bracket(A: PolySymbol, B: PolySymbol) -> PolySymbol:
    """
    ``(A*B - B*A)/(i hbar)`` through its odd series
    ``sum_n (-1)^n hbar^{2n} / (4^n (2n+1)!) * Pi^{2n+1}(A, B)``.
    """
    _check_dims(A, B)
    dA, dB = _Derivatives(A), _Derivatives(B)
    kmax = min(A.phase_degree(), B.phase_degree())
    out = PolySymbol.zero(A.dim)
    n = 0
    while 2 * n + 1 <= kmax:
        k = 2 * n + 1
        term = bidifferential_power(A, B, k, dA, dB)
        if not term.is_zero():
            coef = Fraction((-1) ** n, 4 ** n * math.factorial(k))
            out = out + (term * _hbar_power(A.dim, 2 * n)).scale(coef)
        n += 1
    return out


def poisson_bracket(A: PolySymbol, B: PolySymbol) -> PolySymbol:
    """``d_a A w^{ab} d_b B``."""
    return bidifferential_power(A, B, 1)


def _require_classical(H: PolySymbol, what: str = "H"):
    if H.depends_on("lambda") or H.depends_on("hbar"):
        raise ValueError(f"{what} must be free of lambda and hbar")


def liouville_rhs(H: PolySymbol, rho: PolySymbol) -> PolySymbol:
    """Classical ``d rho/dt = {H, rho}_pb``."""
    _require_classical(H)
    return poisson_bracket(H, rho)


def quantum_liouville_rhs(H: PolySymbol, rho: PolySymbol) -> PolySymbol:
    """Moyal ``d rho/dt = {H, rho}_mb``."""
    _require_classical(H)
    return moyal_bracket(H, rho)


def hbar2_correction(H: PolySymbol, rho: PolySymbol) -> PolySymbol:
    """Quantum minus classical right-hand side; starts at order hbar^2."""
    return quantum_liouville_rhs(H, rho) - liouville_rhs(H, rho)


# ---------------------------------------------------------------------------
# extended Hamiltonians
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtendedHamiltonian:
    """A generator on the extended space (phi, lambda); ``kind`` is
    ``"classical"`` or ``"marinov"``."""

    body: PolySymbol
    kind: str

    def __post_init__(self):
        if self.kind == "classical":
            if self.body.lambda_degree() > 1 or self.body.depends_on("hbar"):
                raise ValueError("classical extended Hamiltonian must be linear in lambda and hbar-free")
        elif self.kind == "marinov":
            if self.body.substitute_lambda_sign(-1) != -self.body:
                raise ValueError("Marinov Hamiltonian must be odd in lambda")
        else:
            raise ValueError(f"unknown kind {self.kind!r}")

    def __str__(self) -> str:
        return self.body.render()


def _lambda_shifts(dim: int, sign: int) -> list[PolySymbol]:
    """``sign * hbar * w^{ab} lambda_b`` for each phase index a."""
    om = SymplecticForm(dim)
    h = PolySymbol.variable(dim, HBAR)
    out = []
    for a in range(2 * dim):
        d = PolySymbol.zero(dim)
        for b in range(2 * dim):
            w = om(a, b)
            if w:
                d = d + PolySymbol.variable(dim, lam(b)).scale(w * sign)
        out.append(d * h)
    return out


def marinov_hamiltonian(H: PolySymbol) -> ExtendedHamiltonian:
    """``(1/2hbar)[H(phi^a - hbar w^{ab} lambda_b) - H(phi^a + hbar w^{ab} lambda_b)]``."""
    _require_classical(H)
    minus = shift_substitute(H, _lambda_shifts(H.dim, -1))
    plus = shift_substitute(H, _lambda_shifts(H.dim, +1))
    body = (minus - plus).scale(MARINOV_PREFACTOR).div_hbar()
    return ExtendedHamiltonian(body, "marinov")


def classical_extended_hamiltonian(H: PolySymbol) -> ExtendedHamiltonian:
    """``lambda_a w^{ab} dH/dphi^b``."""
    _require_classical(H)
    dim = H.dim
    om = SymplecticForm(dim)
    body = PolySymbol.zero(dim)
    for a, b, w in om.nonzero():
        dH = partial_derivative(H, phase(b))
        if not dH.is_zero():
            body = body + (PolySymbol.variable(dim, lam(a)) * dH).scale(w)
    return ExtendedHamiltonian(body, "classical")


# ---------------------------------------------------------------------------
# dequantisation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DequantReport:
    """
    Outcome of the two-rule passage from the Marinov generator to the
    classical one for a single Hamiltonian.

    ``shifted`` is the Grassmann-valued Marinov Hamiltonian before the
    Berezin integral; ``berezin`` the integral; ``classical`` the target.
    """

    hamiltonian: PolySymbol
    marinov: PolySymbol
    shifted: GrassmannElement
    berezin: PolySymbol
    classical: PolySymbol

    @property
    def difference(self) -> PolySymbol:
        return self.berezin - self.classical

    @property
    def exact(self) -> bool:
        return self.difference.is_zero()

    @property
    def verdict(self) -> str:
        return "exact-equal" if self.exact else "mismatch"

    @property
    def hbar_free_before_integration(self) -> bool:
        return self.shifted.M.hbar_degree() == 0

    def to_dict(self) -> dict:
        s = self.shifted
        return {
            "dim": self.hamiltonian.dim,
            "hamiltonian": self.hamiltonian.render(),
            "marinov": self.marinov.render(),
            "grassmann_shifted": {
                "F": s.F.render(), "G": s.G.render(), "L": s.L.render(), "M": s.M.render(),
                "display": s.render(),
            },
            "berezin": self.berezin.render(),
            "classical": self.classical.render(),
            "verdict": self.verdict,
            "difference": self.difference.render(),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "DequantReport":
        dim = int(d["dim"])
        g = d["grassmann_shifted"]
        shifted = GrassmannElement(*(parse_poly(g[k], dim) for k in "FGLM"))
        return cls(
            hamiltonian=parse_poly(d["hamiltonian"], dim),
            marinov=parse_poly(d["marinov"], dim),
            shifted=shifted,
            berezin=parse_poly(d["berezin"], dim),
            classical=parse_poly(d["classical"], dim),
        )

    @classmethod
    def from_json(cls, text: str) -> "DequantReport":
        return cls.from_dict(json.loads(text))


def dequantise(H: PolySymbol) -> DequantReport:
    """
    Rule 1: put ``theta*thetabar`` in front of every ``w^{ab}`` in the Marinov
    Hamiltonian. Rule 2: Berezin-integrate over theta, thetabar. The result is
    compared exactly with ``lambda_a w^{ab} d_b H``.
    """
    _require_classical(H)
    dim = H.dim
    minus = grassmann_shift_eval(H, _lambda_shifts(dim, -1))
    plus = grassmann_shift_eval(H, _lambda_shifts(dim, +1))
    shifted = (minus - plus).scale(MARINOV_PREFACTOR).div_hbar()
    return DequantReport(
        hamiltonian=H,
        marinov=marinov_hamiltonian(H).body,
        shifted=shifted,
        berezin=berezin_integrate(shifted),
        classical=classical_extended_hamiltonian(H).body,
    )


# ---------------------------------------------------------------------------
# operator realisation of lambda
# ---------------------------------------------------------------------------

def lambda_to_operator(X: ExtendedHamiltonian | PolySymbol, s, f: PolySymbol) -> PolySymbol:
    """
    Apply ``X`` to ``f`` with ``lambda_a -> -i*s*d/dphi^a``, derivatives
    standing to the right of all phi-dependent coefficients.
    """
    body = X.body if isinstance(X, ExtendedHamiltonian) else X
    _check_dims(body, f)
    dim = body.dim
    n = 2 * dim
    unit = CRational(0, -1) * CRational(s)
    df = _Derivatives(f)
    out = PolySymbol.zero(dim)
    for e, c in body.terms.items():
        beta = e[n:2 * n]
        g = df(tuple(beta))
        if g.is_zero():
            continue
        coeff = PolySymbol(dim, {e[:n] + (0,) * n + e[2 * n:]: c * unit ** sum(beta)})
        out = out + coeff * g
    return out
