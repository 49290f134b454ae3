"""
Exact symbolic core.

Sparse multivariate polynomials over exact complex rationals in the phase
variables ``phi^a = (q^1..q^N, p^1..p^N)``, the auxiliary variables
``lambda_a`` (same ordering) and a formal commuting ``hbar``.

Exponent vectors have length ``4N + 1``::

    [ phi^0 .. phi^{2N-1} | lambda_0 .. lambda_{2N-1} | hbar ]

Every sign convention downstream is taken from :class:`SymplecticForm`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "CRational",
    "DimensionMismatch",
    "VariableId",
    "PolySymbol",
    "SymplecticForm",
    "phase",
    "lam",
    "HBAR",
    "poly_add",
    "poly_mul",
    "poly_scale",
    "partial_derivative",
    "shift_substitute",
    "hamiltonian_flow_rhs",
    "variable_name",
]


class DimensionMismatch(ValueError):
    """Operands live in phase spaces of different dimension."""


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------

def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


class CRational:
    """Exact complex rational ``re + im*i`` with :class:`fractions.Fraction` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, CRational):
            if im:
                raise TypeError("imaginary part given twice")
            self.re, self.im = re.re, re.im
            return
        self.re = _frac(re)
        self.im = _frac(im)

    @classmethod
    def _make(cls, re: Fraction, im: Fraction) -> "CRational":
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    @classmethod
    def coerce(cls, x) -> "CRational":
        if isinstance(x, CRational):
            return x
        if isinstance(x, complex):
            raise TypeError("floating complex values are not exact; use CRational")
        return cls(x)

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other) -> bool:
        if isinstance(other, CRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Rational)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self) -> int:
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __neg__(self) -> "CRational":
        return CRational._make(-self.re, -self.im)

    def __add__(self, other) -> "CRational":
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return CRational._make(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other) -> "CRational":
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return CRational._make(self.re - o.re, self.im - o.im)

    def __rsub__(self, other) -> "CRational":
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other) -> "CRational":
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        a, b, c, d = self.re, self.im, o.re, o.im
        if not b and not d:
            return CRational._make(a * c, b)
        return CRational._make(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "CRational":
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        den = o.re * o.re + o.im * o.im
        if not den:
            raise ZeroDivisionError("CRational division by zero")
        num = self * o.conjugate()
        return CRational._make(num.re / den, num.im / den)

    def __rtruediv__(self, other) -> "CRational":
        o = _coerce_or_none(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, k: int) -> "CRational":
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return CRational(1) / (self ** (-k))
        out = CRational(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "CRational":
        return CRational._make(self.re, -self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    @property
    def is_real(self) -> bool:
        return self.im == 0

    def __repr__(self) -> str:
        return f"CRational({self.re!s}, {self.im!s})"

    def __str__(self) -> str:
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{_fmt_frac(self.im)}*i" if self.im != 1 else "i"
        sign = "-" if self.im < 0 else "+"
        im = abs(self.im)
        tail = "i" if im == 1 else f"{_fmt_frac(im)}*i"
        return f"({self.re} {sign} {tail})"


I = CRational._make(Fraction(0), Fraction(1))
_ZERO = CRational._make(Fraction(0), Fraction(0))
_ONE = CRational._make(Fraction(1), Fraction(0))


def _coerce_or_none(x):
    if isinstance(x, CRational):
        return x
    if isinstance(x, (int, Rational)):
        return CRational._make(Fraction(x), Fraction(0))
    return None


def _fmt_frac(x: Fraction) -> str:
    return str(x)


# ---------------------------------------------------------------------------
# variables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VariableId:
    """A ring variable: ``phase`` index a is phi^a, ``lambda`` index a is lambda_a."""

    kind: str
    index: int | None = None

    def __post_init__(self):
        if self.kind not in ("phase", "lambda", "hbar"):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == "hbar":
            if self.index is not None:
                raise ValueError("hbar carries no index")
        elif not isinstance(self.index, int) or self.index < 0:
            raise ValueError(f"{self.kind} variable needs a non-negative index")

    def slot(self, dim: int) -> int:
        if self.kind == "hbar":
            return 4 * dim
        if self.index >= 2 * dim:
            raise IndexError(f"{self.kind} index {self.index} out of range for N={dim}")
        return self.index if self.kind == "phase" else 2 * dim + self.index


def phase(a: int) -> VariableId:
    return VariableId("phase", a)


def lam(a: int) -> VariableId:
    return VariableId("lambda", a)


HBAR = VariableId("hbar")


def variable_name(dim: int, slot: int) -> str:
    """Grammar name of exponent slot ``slot`` (``q``, ``p2``, ``lq``, ``h`` ...)."""
    if slot == 4 * dim:
        return "h"
    prefix = ""
    if slot >= 2 * dim:
        prefix = "l"
        slot -= 2 * dim
    letter = "q" if slot < dim else "p"
    i = slot % dim
    return f"{prefix}{letter}" if dim == 1 else f"{prefix}{letter}{i + 1}"


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------

def _add_exp(e1: tuple, e2: tuple) -> tuple:
    return tuple(a + b for a, b in zip(e1, e2))


class PolySymbol:
    """
    Canonical sparse polynomial in (phi, lambda, hbar) with exact coefficients.

    Instances are immutable; every operation returns a new canonical object,
    so two polynomials are equal iff their term maps are equal.

    Parameters
    ----------
    dim : int
        Number of degrees of freedom N (phase space is 2N dimensional).
    terms : mapping, optional
        Exponent tuple of length ``4N + 1`` -> coefficient. Zero coefficients
        are dropped.
    """

    __slots__ = ("dim", "_terms", "_hash")

    def __init__(self, dim: int, terms: Mapping[tuple, object] | None = None):
        if not isinstance(dim, int) or dim < 1:
            raise ValueError("dimension N must be a positive integer")
        nv = 4 * dim + 1
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != nv:
                raise ValueError(f"exponent vector must have length {nv}, got {len(exps)}")
            if any(e < 0 for e in exps):
                raise ValueError("exponents must be non-negative")
            c = CRational.coerce(c)
            if c:
                clean[exps] = clean.get(exps, _ZERO) + c
                if not clean[exps]:
                    del clean[exps]
        self.dim = dim
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, dim: int, terms: dict) -> "PolySymbol":
        # trusted constructor: terms already canonical
        obj = object.__new__(cls)
        obj.dim = dim
        obj._terms = terms
        obj._hash = None
        return obj

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> "PolySymbol":
        return cls._raw(dim, {})

    @classmethod
    def constant(cls, dim: int, c) -> "PolySymbol":
        c = CRational.coerce(c)
        if not c:
            return cls.zero(dim)
        return cls._raw(dim, {(0,) * (4 * dim + 1): c})

    @classmethod
    def one(cls, dim: int) -> "PolySymbol":
        return cls.constant(dim, 1)

    @classmethod
    def variable(cls, dim: int, v: VariableId, power: int = 1) -> "PolySymbol":
        exps = [0] * (4 * dim + 1)
        exps[v.slot(dim)] = power
        return cls._raw(dim, {tuple(exps): _ONE})

    # -- inspection -------------------------------------------------------
    @property
    def terms(self) -> Mapping[tuple, CRational]:
        return MappingProxyType(self._terms)

    @property
    def nvars(self) -> int:
        return 4 * self.dim + 1

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def coefficient(self, exps: Sequence[int]) -> CRational:
        return self._terms.get(tuple(exps), _ZERO)

    def constant_term(self) -> CRational:
        return self.coefficient((0,) * self.nvars)

    def degree(self) -> int:
        """Total degree in all variables; the zero polynomial has degree -1."""
        return max((sum(e) for e in self._terms), default=-1)

    def phase_degree(self) -> int:
        n = 2 * self.dim
        return max((sum(e[:n]) for e in self._terms), default=-1)

    def lambda_degree(self) -> int:
        n = 2 * self.dim
        return max((sum(e[n:2 * n]) for e in self._terms), default=-1)

    def hbar_degree(self) -> int:
        """Highest power of hbar (0 for hbar-free or zero polynomials)."""
        return max((e[-1] for e in self._terms), default=0)

    def hbar_order(self) -> float:
        """Lowest power of hbar present; ``math.inf`` for the zero polynomial."""
        return min((e[-1] for e in self._terms), default=math.inf)

    def depends_on(self, kind: str) -> bool:
        n = 2 * self.dim
        sl = {"phase": slice(0, n), "lambda": slice(n, 2 * n), "hbar": slice(2 * n, 2 * n + 1)}[kind]
        return any(any(e[sl]) for e in self._terms)

    def is_real(self) -> bool:
        return all(c.is_real for c in self._terms.values())

    # -- ring operations --------------------------------------------------
    def _check(self, other: "PolySymbol"):
        if other.dim != self.dim:
            raise DimensionMismatch(f"N={self.dim} vs N={other.dim}")

    def _lift(self, other) -> "PolySymbol | None":
        if isinstance(other, PolySymbol):
            self._check(other)
            return other
        c = _coerce_or_none(other)
        if c is None:
            return None
        return PolySymbol.constant(self.dim, c)

    def __eq__(self, other) -> bool:
        if isinstance(other, PolySymbol):
            return self.dim == other.dim and self._terms == other._terms
        c = _coerce_or_none(other)
        if c is None:
            return NotImplemented
        return self == PolySymbol.constant(self.dim, c)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.dim, frozenset(self._terms.items())))
        return self._hash

    def __neg__(self) -> "PolySymbol":
        return PolySymbol._raw(self.dim, {e: -c for e, c in self._terms.items()})

    def __add__(self, other) -> "PolySymbol":
        o = self._lift(other)
        if o is None:
            return NotImplemented
        out = dict(self._terms)
        for e, c in o._terms.items():
            s = out.get(e)
            if s is None:
                out[e] = c
            else:
                s = s + c
                if s:
                    out[e] = s
                else:
                    del out[e]
        return PolySymbol._raw(self.dim, out)

    __radd__ = __add__

    def __sub__(self, other) -> "PolySymbol":
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other) -> "PolySymbol":
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other) -> "PolySymbol":
        if not isinstance(other, PolySymbol):
            c = _coerce_or_none(other)
            if c is None:
                return NotImplemented
            return self.scale(c)
        self._check(other)
        out: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = _add_exp(e1, e2)
                prod = c1 * c2
                s = out.get(e)
                out[e] = prod if s is None else s + prod
        return PolySymbol._raw(self.dim, {e: c for e, c in out.items() if c})

    def __rmul__(self, other) -> "PolySymbol":
        c = _coerce_or_none(other)
        if c is None:
            return NotImplemented
        return self.scale(c)

    def __pow__(self, k: int) -> "PolySymbol":
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        out = PolySymbol.one(self.dim)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def scale(self, c) -> "PolySymbol":
        c = CRational.coerce(c)
        if not c:
            return PolySymbol.zero(self.dim)
        return PolySymbol._raw(self.dim, {e: v * c for e, v in self._terms.items()})

    def conjugate(self) -> "PolySymbol":
        return PolySymbol._raw(self.dim, {e: c.conjugate() for e, c in self._terms.items()})

    # -- hbar handling ----------------------------------------------------
    def div_hbar(self) -> "PolySymbol":
        """Exact division by the formal hbar; fails if any term is hbar-free."""
        out = {}
        for e, c in self._terms.items():
            if e[-1] == 0:
                raise ArithmeticError(f"term {PolySymbol._raw(self.dim, {e: c})} is not divisible by hbar")
            out[e[:-1] + (e[-1] - 1,)] = c
        return PolySymbol._raw(self.dim, out)

    def at_hbar_zero(self) -> "PolySymbol":
        """Set the formal hbar to zero."""
        return PolySymbol._raw(self.dim, {e: c for e, c in self._terms.items() if e[-1] == 0})

    def substitute_lambda_sign(self, sign: int) -> "PolySymbol":
        """Map lambda -> sign*lambda (sign = +1 or -1)."""
        n = 2 * self.dim
        out = {}
        for e, c in self._terms.items():
            odd = sum(e[n:2 * n]) % 2
            out[e] = -c if (sign < 0 and odd) else c
        return PolySymbol._raw(self.dim, out)

    # -- numerics ---------------------------------------------------------
    def evaluate(self, phase_values: Sequence, lambda_values: Sequence | None = None, hbar=None):
        """
        Evaluate numerically (numpy broadcasting).

        Missing lambda or hbar values are only allowed when the polynomial
        does not depend on them.
        """
        n = 2 * self.dim
        if len(phase_values) != n:
            raise DimensionMismatch(f"expected {n} phase values, got {len(phase_values)}")
        vals = [np.asarray(v) for v in phase_values]
        if lambda_values is None:
            if self.depends_on("lambda"):
                raise ValueError("polynomial depends on lambda; values required")
            lambda_values = [0.0] * n
        vals += [np.asarray(v) for v in lambda_values]
        if hbar is None:
            if self.depends_on("hbar"):
                raise ValueError("polynomial depends on hbar; a value is required")
            hbar = 0.0
        vals.append(np.asarray(hbar))
        shape = np.broadcast_shapes(*(v.shape for v in vals))
        real = self.is_real()
        out = np.zeros(shape, dtype=float if real else complex)
        for e, c in self._terms.items():
            term = np.full(shape, float(c.re) if real else complex(c))
            for v, k in zip(vals, e):
                if k:
                    term = term * v ** k
            out = out + term
        return out

    # -- rendering --------------------------------------------------------
    def _render_order(self) -> list[int]:
        n = 2 * self.dim
        return list(range(n, 2 * n)) + list(range(n)) + [2 * n]

    def sorted_terms(self) -> list[tuple[tuple, CRational]]:
        order = self._render_order()
        return sorted(
            self._terms.items(),
            key=lambda kv: (sum(kv[0]), tuple(kv[0][i] for i in order)),
            reverse=True,
        )

    def render(self) -> str:
        """Text form accepted back by :func:`dequant.parser.parse_poly`."""
        if not self._terms:
            return "0"
        order = self._render_order()
        pieces = []
        for k, (e, c) in enumerate(self.sorted_terms()):
            mono = "*".join(
                variable_name(self.dim, i) + (f"^{e[i]}" if e[i] > 1 else "")
                for i in order if e[i]
            )
            negative, body = _coef_text(c)
            if mono:
                text = mono if body == "1" else f"{body}*{mono}"
            else:
                text = body
            if k == 0:
                pieces.append(("-" if negative else "") + text)
            else:
                pieces.append((" - " if negative else " + ") + text)
        return "".join(pieces)

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return f"PolySymbol(N={self.dim}, {self.render()!r})"


def _coef_text(c: CRational) -> tuple[bool, str]:
    """(is_negative, magnitude text) for a coefficient."""
    if not c.im:
        return c.re < 0, str(abs(c.re))
    if not c.re:
        m = abs(c.im)
        return c.im < 0, "i" if m == 1 else f"{m}*i"
    sign = "-" if c.im < 0 else "+"
    m = abs(c.im)
    tail = "i" if m == 1 else f"{m}*i"
    return False, f"({c.re} {sign} {tail})"


# ---------------------------------------------------------------------------
# symplectic form
# ---------------------------------------------------------------------------

class SymplecticForm:
    """
    The constant symplectic matrix ``omega^{ab} = [[0, I_N], [-I_N, 0]]`` and
    its inverse ``omega_{ab}``, which equals ``-omega^{ab}`` entrywise.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("N must be positive")
        self.dim = dim
        n = 2 * dim
        up = [[0] * n for _ in range(n)]
        for i in range(dim):
            up[i][dim + i] = 1
            up[dim + i][i] = -1
        self.upper = tuple(tuple(r) for r in up)
        self.lower = tuple(tuple(-x for x in r) for r in up)

    def __call__(self, a: int, b: int) -> int:
        return self.upper[a][b]

    def nonzero(self) -> list[tuple[int, int, int]]:
        """Nonzero entries ``(a, b, omega^{ab})``."""
        return [(a, b, w) for a, row in enumerate(self.upper) for b, w in enumerate(row) if w]

    def matrix(self) -> np.ndarray:
        return np.array(self.upper, dtype=int)

    def inverse_matrix(self) -> np.ndarray:
        return np.array(self.lower, dtype=int)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def poly_add(a: PolySymbol, b: PolySymbol) -> PolySymbol:
    return a + b


def poly_mul(a: PolySymbol, b: PolySymbol) -> PolySymbol:
    return a * b


def poly_scale(a: PolySymbol, c) -> PolySymbol:
    if isinstance(c, PolySymbol):
        return a * c
    return a.scale(c)


def partial_derivative(P: PolySymbol, v: VariableId | int, times: int = 1) -> PolySymbol:
    """Exact formal derivative; an int ``v`` is a raw exponent slot."""
    slot = v if isinstance(v, int) else v.slot(P.dim)
    out = {}
    for e, c in P._terms.items():
        k = e[slot]
        if k < times:
            continue
        f = math.perm(k, times)
        ne = e[:slot] + (k - times,) + e[slot + 1:]
        out[ne] = c * f
    return PolySymbol._raw(P.dim, out)


def _shift_table(P: PolySymbol, shifts: Sequence[PolySymbol | None]) -> list:
    n = 2 * P.dim
    if len(shifts) != n:
        raise DimensionMismatch(f"need {n} shifts, got {len(shifts)}")
    table = []
    for a, d in enumerate(shifts):
        if d is None:
            d = PolySymbol.zero(P.dim)
        elif d.dim != P.dim:
            raise DimensionMismatch(f"shift {a} has N={d.dim}, polynomial has N={P.dim}")
        table.append(d)
    return table


def shift_substitute(P: PolySymbol, shifts: Sequence[PolySymbol | None]) -> PolySymbol:
    """
    Return ``P(phi^a + shifts[a])`` expanded exactly.

    ``shifts`` has one entry per phase variable; ``None`` means no shift.
    """
    dim = P.dim
    n = 2 * dim
    deltas = _shift_table(P, shifts)
    # cached powers of (phi^a + Delta^a)
    powers: dict[tuple[int, int], PolySymbol] = {}

    def shifted_power(a: int, k: int) -> PolySymbol:
        key = (a, k)
        if key not in powers:
            if k == 0:
                powers[key] = PolySymbol.one(dim)
            else:
                base = PolySymbol.variable(dim, phase(a)) + deltas[a]
                powers[key] = shifted_power(a, k - 1) * base
        return powers[key]

    out = PolySymbol.zero(dim)
    for e, c in P._terms.items():
        rest = (0,) * n + e[n:]
        term = PolySymbol._raw(dim, {rest: c})
        for a in range(n):
            if e[a]:
                term = term * shifted_power(a, e[a])
        out = out + term
    return out


def hamiltonian_flow_rhs(H: PolySymbol) -> list[PolySymbol]:
    """Components ``omega^{ab} dH/dphi^b`` of Hamilton's vector field."""
    if H.depends_on("lambda") or H.depends_on("hbar"):
        raise ValueError("Hamiltonian must depend on phase variables only")
    om = SymplecticForm(H.dim)
    grads = [partial_derivative(H, phase(b)) for b in range(2 * H.dim)]
    out = []
    for a in range(2 * H.dim):
        comp = PolySymbol.zero(H.dim)
        for b in range(2 * H.dim):
            w = om(a, b)
            if w:
                comp = comp + grads[b].scale(w)
        out.append(comp)
    return out


def phase_only(P: PolySymbol) -> bool:
    return not (P.depends_on("lambda") or P.depends_on("hbar"))


def sum_polys(dim: int, polys: Iterable[PolySymbol]) -> PolySymbol:
    out = PolySymbol.zero(dim)
    for p in polys:
        out = out + p
    return out
