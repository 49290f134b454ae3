"""Shared oracles and hypothesis strategies."""

from __future__ import annotations

from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import HealthCheck, settings, strategies as st

from dequant.symbolic import CRational, PolySymbol, variable_name

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


# ---------------------------------------------------------------------------
# sympy oracle: an independent polynomial arithmetic to compare against
# ---------------------------------------------------------------------------

def sym_vars(dim: int) -> list[sp.Symbol]:
    """One sympy symbol per exponent slot, named as the parser names them."""
    return [sp.Symbol(variable_name(dim, s)) for s in range(4 * dim + 1)]


def to_sympy(P: PolySymbol) -> sp.Expr:
    syms = sym_vars(P.dim)
    expr = sp.Integer(0)
    for e, c in P.terms.items():
        coef = sp.Rational(c.re.numerator, c.re.denominator) + sp.I * sp.Rational(c.im.numerator, c.im.denominator)
        mono = sp.Integer(1)
        for s, k in zip(syms, e):
            mono *= s ** k
        expr += coef * mono
    return expr


def from_sympy(expr: sp.Expr, dim: int) -> PolySymbol:
    syms = sym_vars(dim)
    poly = sp.Poly(sp.expand(expr), *syms)
    terms = {}
    for mono, coef in poly.terms():
        re, im = coef.as_real_imag()
        terms[tuple(mono)] = CRational(Fraction(int(re.p), int(re.q)), Fraction(int(im.p), int(im.q)))
    return PolySymbol(dim, terms)


def sym_equal(P: PolySymbol, expr: sp.Expr) -> bool:
    return sp.expand(to_sympy(P) - expr) == 0


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------

rationals = st.builds(Fraction, st.integers(-9, 9), st.integers(1, 6))


@st.composite
def polys(draw, dim: int = 1, max_degree: int = 4, max_terms: int = 5, *,
          lambdas: bool = False, hbar: bool = False, complex_coeffs: bool = False,
          phase: bool = True) -> PolySymbol:
    n = 2 * dim
    slots = list(range(n)) if phase else []
    if lambdas:
        slots += list(range(n, 2 * n))
    if hbar:
        slots.append(2 * n)
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        exps = [0] * (4 * dim + 1)
        for s in draw(st.lists(st.sampled_from(slots), max_size=max_degree)):
            exps[s] += 1
        re = draw(rationals)
        im = draw(rationals) if complex_coeffs else 0
        terms[tuple(exps)] = CRational(re, im)
    return PolySymbol(dim, terms)


dims = st.sampled_from((1, 2))


# ---------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion in the summary
# ---------------------------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance_report():
    """Call with (number, passed, detail) to record a criterion outcome."""
    def record(number: int, passed: bool, detail: str):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
