"""
Two-generator exterior algebra over polynomial coefficients.

An element is ``F + G*theta + L*thetabar + M*theta*thetabar`` with
``theta**2 = thetabar**2 = 0`` and ``theta*thetabar = -thetabar*theta``.
Coefficients are ordinary (even) polynomials and commute with both
generators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .symbolic import DimensionMismatch, PolySymbol, phase

__all__ = [
    "GrassmannElement",
    "g_mul",
    "grassmann_shift_eval",
    "berezin_integrate",
    "integrate_theta",
    "integrate_thetabar",
    "theta",
    "thetabar",
    "theta_thetabar",
]


@dataclass(frozen=True)
class GrassmannElement:
    F: PolySymbol
    G: PolySymbol
    L: PolySymbol
    M: PolySymbol

    def __post_init__(self):
        dims = {self.F.dim, self.G.dim, self.L.dim, self.M.dim}
        if len(dims) != 1:
            raise DimensionMismatch(f"components have mixed dimensions {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.F.dim

    @classmethod
    def scalar(cls, P: PolySymbol) -> "GrassmannElement":
        z = PolySymbol.zero(P.dim)
        return cls(P, z, z, z)

    @classmethod
    def zero(cls, dim: int) -> "GrassmannElement":
        return cls.scalar(PolySymbol.zero(dim))

    def components(self) -> tuple[PolySymbol, PolySymbol, PolySymbol, PolySymbol]:
        return (self.F, self.G, self.L, self.M)

    def _zip(self, other: "GrassmannElement", op) -> "GrassmannElement":
        if other.dim != self.dim:
            raise DimensionMismatch(f"N={self.dim} vs N={other.dim}")
        return GrassmannElement(*(op(a, b) for a, b in zip(self.components(), other.components())))

    def __add__(self, other: "GrassmannElement") -> "GrassmannElement":
        return self._zip(other, lambda a, b: a + b)

    def __sub__(self, other: "GrassmannElement") -> "GrassmannElement":
        return self._zip(other, lambda a, b: a - b)

    def __neg__(self) -> "GrassmannElement":
        return GrassmannElement(*(-c for c in self.components()))

    def __mul__(self, other) -> "GrassmannElement":
        if isinstance(other, GrassmannElement):
            return g_mul(self, other)
        return self.scale(other)

    def scale(self, c) -> "GrassmannElement":
        """Multiply by an even coefficient (number or PolySymbol)."""
        if isinstance(c, PolySymbol):
            return GrassmannElement(*(x * c for x in self.components()))
        return GrassmannElement(*(x.scale(c) for x in self.components()))

    def div_hbar(self) -> "GrassmannElement":
        return GrassmannElement(*(c.div_hbar() for c in self.components()))

    def is_odd(self) -> bool:
        return self.F.is_zero() and self.M.is_zero()

    def render(self) -> str:
        parts = []
        if not self.F.is_zero():
            parts.append(self.F.render())
        for comp, gen in ((self.G, "θ"), (self.L, "θ̄"), (self.M, "θθ̄")):
            if not comp.is_zero():
                parts.append(f"({comp.render()}){gen}")
        return " + ".join(parts) if parts else "0"

    def __str__(self) -> str:
        return self.render()


def theta(dim: int) -> GrassmannElement:
    z, one = PolySymbol.zero(dim), PolySymbol.one(dim)
    return GrassmannElement(z, one, z, z)


def thetabar(dim: int) -> GrassmannElement:
    z, one = PolySymbol.zero(dim), PolySymbol.one(dim)
    return GrassmannElement(z, z, one, z)


def theta_thetabar(dim: int) -> GrassmannElement:
    z, one = PolySymbol.zero(dim), PolySymbol.one(dim)
    return GrassmannElement(z, z, z, one)


def g_mul(x: GrassmannElement, y: GrassmannElement) -> GrassmannElement:
    """Product in the basis (1, theta, thetabar, theta*thetabar)."""
    if x.dim != y.dim:
        raise DimensionMismatch(f"N={x.dim} vs N={y.dim}")
    F = x.F * y.F
    G = x.F * y.G + x.G * y.F
    L = x.F * y.L + x.L * y.F
    # theta*thetabar from G_x L_y; thetabar*theta = -theta*thetabar from L_x G_y
    M = x.F * y.M + x.M * y.F + x.G * y.L - x.L * y.G
    return GrassmannElement(F, G, L, M)


def _g_pow(x: GrassmannElement, k: int) -> GrassmannElement:
    out = GrassmannElement.scalar(PolySymbol.one(x.dim))
    for _ in range(k):
        out = g_mul(out, x)
    return out


def grassmann_shift_eval(P: PolySymbol, shifts: Sequence[PolySymbol | None]) -> GrassmannElement:
    """
    Evaluate ``P(phi^a + theta*thetabar*shifts[a])`` inside the algebra.

    Each phase variable is replaced by the even element
    ``phi^a + shifts[a]*theta*thetabar`` and the monomials are multiplied out
    with :func:`g_mul`; nilpotency truncates the Taylor series by itself.
    """
    dim = P.dim
    n = 2 * dim
    if len(shifts) != n:
        raise DimensionMismatch(f"need {n} shifts, got {len(shifts)}")
    zero = PolySymbol.zero(dim)
    gens = []
    for a, d in enumerate(shifts):
        d = zero if d is None else d
        if d.dim != dim:
            raise DimensionMismatch(f"shift {a} has N={d.dim}, polynomial has N={dim}")
        gens.append(GrassmannElement(PolySymbol.variable(dim, phase(a)), zero, zero, d))

    cache: dict[tuple[int, int], GrassmannElement] = {}

    def power(a: int, k: int) -> GrassmannElement:
        if (a, k) not in cache:
            cache[(a, k)] = _g_pow(gens[a], k)
        return cache[(a, k)]

    out = GrassmannElement.zero(dim)
    for e, c in P.terms.items():
        rest = PolySymbol(dim, {(0,) * n + e[n:]: c})
        term = GrassmannElement.scalar(rest)
        for a in range(n):
            if e[a]:
                term = g_mul(term, power(a, e[a]))
        out = out + term
    return out


def integrate_thetabar(x: GrassmannElement) -> GrassmannElement:
    """``∫ x dthetabar`` with ``∫ thetabar dthetabar = 1``, ``∫ dthetabar = 0``."""
    z = PolySymbol.zero(x.dim)
    # theta*thetabar already has thetabar adjacent to the measure
    return GrassmannElement(x.L, x.M, z, z)


def integrate_theta(x: GrassmannElement) -> GrassmannElement:
    """``∫ x dtheta`` with ``∫ theta dtheta = 1``, ``∫ dtheta = 0``."""
    z = PolySymbol.zero(x.dim)
    # theta*thetabar = -thetabar*theta before integrating
    return GrassmannElement(x.G, z, -x.M, z)


def berezin_integrate(x: GrassmannElement) -> PolySymbol:
    """
    ``∫ x dthetabar dtheta``, the inner measure acting first.

    With this ordering ``∫ theta*thetabar dthetabar dtheta = +1``, so the
    result is the ``theta*thetabar`` coefficient ``M``.
    """
    return integrate_theta(integrate_thetabar(x)).F
