"""
Recursive-descent parser for polynomial text.

Grammar::

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := base ('^' uint)?
    base   := number | var | 'i' | '(' expr ')'
    var    := 'q'|'p'|'h'|'lq'|'lp' | ('q'|'p'|'lq'|'lp') uint
    number := uint | uint '.' digits | uint '/' uint

Subscripts are 1-based (``q1 .. qN``). Bare ``q, p, lq, lp`` are accepted
only for N = 1. ``i`` is the imaginary unit, which rendered output uses.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .symbolic import CRational, PolySymbol, VariableId, HBAR

__all__ = ["PolyParseError", "parse_poly"]


class PolyParseError(ValueError):
    """Malformed polynomial text; ``position`` is the 0-based character offset."""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>\d+(?:\.\d+|/\d+)?)"
    r"|(?P<ident>[A-Za-z]+\d*)"
    r"|(?P<op>[-+*^()])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolyParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
        if kind == "num" and pos < n and text[pos] in "./":
            raise PolyParseError("malformed number", pos, text)
    tokens.append(("end", "", n))
    return tokens


_VAR = re.compile(r"^(lq|lp|q|p)(\d*)$")


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def error(self, msg: str, pos: int | None = None):
        raise PolyParseError(msg, self.tok[2] if pos is None else pos, self.text)

    def parse(self) -> PolySymbol:
        if self.tok[0] == "end":
            self.error("empty expression")
        out = self.expr()
        if self.tok[0] != "end":
            self.error(f"unexpected {self.tok[1]!r}")
        return out

    def expr(self) -> PolySymbol:
        sign = 1
        if self.tok[0] == "op" and self.tok[1] in "+-":
            sign = -1 if self.advance()[1] == "-" else 1
        out = self.term()
        if sign < 0:
            out = -out
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            t = self.term()
            out = out + t if op == "+" else out - t
        return out

    def term(self) -> PolySymbol:
        out = self.factor()
        while self.tok[0] == "op" and self.tok[1] == "*":
            self.advance()
            out = out * self.factor()
        return out

    def factor(self) -> PolySymbol:
        base = self.base()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            kind, val, pos = self.tok
            if kind != "num" or not val.isdigit():
                self.error("exponent must be a non-negative integer")
            self.advance()
            return base ** int(val)
        return base

    def base(self) -> PolySymbol:
        kind, val, pos = self.tok
        if kind == "num":
            self.advance()
            if "/" in val:
                a, b = val.split("/")
                if int(b) == 0:
                    self.error("zero denominator", pos)
                c = Fraction(int(a), int(b))
            else:
                c = Fraction(val)  # exact for decimal strings
            return PolySymbol.constant(self.dim, c)
        if kind == "ident":
            self.advance()
            return self.variable(val, pos)
        if kind == "op" and val == "(":
            self.advance()
            inner = self.expr()
            if not (self.tok[0] == "op" and self.tok[1] == ")"):
                self.error("expected ')'")
            self.advance()
            return inner
        if kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected {val!r}")

    def variable(self, name: str, pos: int) -> PolySymbol:
        dim = self.dim
        if name == "h":
            return PolySymbol.variable(dim, HBAR)
        if name == "i":
            return PolySymbol.constant(dim, CRational(0, 1))
        m = _VAR.match(name)
        if not m:
            self.error(f"unknown variable {name!r}", pos)
        stem, sub = m.groups()
        if sub == "":
            if dim != 1:
                self.error(f"variable {stem!r} needs an index for N={dim}", pos)
            i = 0
        else:
            i = int(sub) - 1
            if not 0 <= i < dim:
                self.error(f"index of {name!r} out of range for N={dim}", pos)
        a = i if stem in ("q", "lq") else dim + i
        kind = "lambda" if stem.startswith("l") else "phase"
        return PolySymbol.variable(dim, VariableId(kind, a))


def parse_poly(text: str, dim: int = 1) -> PolySymbol:
    """
    Parse polynomial text into a canonical :class:`PolySymbol`.

    Examples
    --------
    >>> str(parse_poly("0.5*p^2 + 0.25*q^4"))
    '1/4*q^4 + 1/2*p^2'
    >>> parse_poly("q^-1")
    Traceback (most recent call last):
    ...
    dequant.parser.PolyParseError: exponent must be a non-negative integer at position 2
    """
    if not isinstance(dim, int) or dim < 1:
        raise ValueError("N must be a positive integer")
    return _Parser(text, dim).parse()
