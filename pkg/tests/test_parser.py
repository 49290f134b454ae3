from fractions import Fraction

import pytest
from hypothesis import given

from dequant.parser import PolyParseError, parse_poly
from dequant.symbolic import CRational, PolySymbol, phase

from conftest import dims, polys, sym_equal, sym_vars


def test_single_power():
    assert parse_poly("q^2", 1) == PolySymbol.variable(1, phase(0), 2)


def test_decimals_are_exact():
    P = parse_poly("0.5*p^2 + 0.25*q^4", 1)
    assert P.coefficient((0, 2, 0, 0, 0)) == CRational(Fraction(1, 2))
    assert P.coefficient((4, 0, 0, 0, 0)) == CRational(Fraction(1, 4))
    assert len(P) == 2


def test_fraction_and_imaginary_literals():
    q, p, lq, lp, h = sym_vars(1)
    import sympy as sp
    assert sym_equal(parse_poly("3/4*i*h*lq - 2", 1), sp.Rational(3, 4) * sp.I * h * lq - 2)


def test_parentheses_expand():
    q, p, *_ = sym_vars(1)
    assert sym_equal(parse_poly("(q+p)^3 - (q-p)*(q+p)", 1), (q + p) ** 3 - (q - p) * (q + p))


def test_subscripted_variables():
    syms = sym_vars(2)
    q1, q2, p1, p2, lq1, lq2, lp1, lp2, h = syms
    assert sym_equal(parse_poly("q1*p2 + lq2^2 - h*lp1", 2), q1 * p2 + lq2 ** 2 - h * lp1)


@pytest.mark.parametrize("text, position", [
    ("q^-1", 2),
    ("q +", 3),
    ("x", 0),
    ("q*", 2),
    ("(q", 2),
    ("q^1.5", 2),
    ("p3", 0),
    ("2 $ q", 2),
])
def test_syntax_errors_report_position(text, position):
    with pytest.raises(PolyParseError) as info:
        parse_poly(text, 1)
    assert info.value.position == position


def test_bare_names_need_one_degree_of_freedom():
    with pytest.raises(PolyParseError):
        parse_poly("q", 2)


def test_parse_error_is_value_error():
    assert issubclass(PolyParseError, ValueError)


@given(dims.flatmap(lambda d: polys(d, 4, lambdas=True, hbar=True, complex_coeffs=True)))
def test_render_parse_roundtrip(P):
    assert parse_poly(P.render(), P.dim) == P
