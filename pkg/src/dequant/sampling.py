"""Seeded random polynomials for property runs."""

from __future__ import annotations

import random
from fractions import Fraction

from .symbolic import CRational, PolySymbol

__all__ = ["random_poly", "random_hamiltonian"]


def random_poly(rng: random.Random, dim: int, max_degree: int, n_terms: int | None = None,
                *, lambdas: bool = False, hbar: bool = False, complex_coeffs: bool = False,
                max_num: int = 9, max_den: int = 6) -> PolySymbol:
    """
    Random polynomial with small rational coefficients.

    Only phase variables appear unless ``lambdas``/``hbar`` are set.
    """
    n = 2 * dim
    if n_terms is None:
        n_terms = rng.randint(1, 6)
    terms = {}
    for _ in range(n_terms):
        deg = rng.randint(0, max_degree)
        exps = [0] * (4 * dim + 1)
        slots = list(range(n))
        if lambdas:
            slots += list(range(n, 2 * n))
        if hbar:
            slots.append(2 * n)
        for _ in range(deg):
            exps[rng.choice(slots)] += 1
        re = Fraction(rng.randint(-max_num, max_num), rng.randint(1, max_den))
        im = Fraction(rng.randint(-max_num, max_num), rng.randint(1, max_den)) if complex_coeffs else 0
        terms[tuple(exps)] = (re, im)
    return PolySymbol(dim, {e: CRational(re, im) for e, (re, im) in terms.items()})


def random_hamiltonian(rng: random.Random, dim: int, max_degree: int, n_terms: int | None = None) -> PolySymbol:
    """Random phase-space polynomial, guaranteed not identically zero."""
    while True:
        H = random_poly(rng, dim, max_degree, n_terms)
        if not H.is_zero():
            return H
