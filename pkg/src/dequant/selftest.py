"""
Fast invariant suite behind ``dequant selftest``.

Each suite is a function that raises ``AssertionError`` on failure. The
``mutation`` suite corrupts the dequantisation pipeline on purpose and
passes only if the corruption is detected.
"""

from __future__ import annotations

import contextlib
import random
import tempfile
import time
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from . import moyal
from .grassmann import GrassmannElement, berezin_integrate, g_mul, theta, thetabar
from .io import load_symbol, read_trajectory_csv, save_symbol, write_trajectory_csv
from .parser import PolyParseError, parse_poly
from .sampling import random_hamiltonian, random_poly
from .symbolic import CRational, PolySymbol

__all__ = ["SUITES", "MUTATIONS", "mutation", "run_selftest", "dequant_suite_passes"]

MUTATIONS = ("berezin-sign", "marinov-factor")
_PRISTINE_BEREZIN = moyal.berezin_integrate
_PRISTINE_PREFACTOR = moyal.MARINOV_PREFACTOR


@contextlib.contextmanager
def mutation(kind: str | None) -> Iterator[None]:
    """
    Temporarily corrupt one convention of the dequantisation pipeline.

    Corruptions are built from the unmodified functions, so nesting the
    same mutation does not undo it.
    """
    if kind is None:
        yield
        return
    if kind == "berezin-sign":
        original = moyal.berezin_integrate
        moyal.berezin_integrate = lambda x: -_PRISTINE_BEREZIN(x)
        try:
            yield
        finally:
            moyal.berezin_integrate = original
    elif kind == "marinov-factor":
        original = moyal.MARINOV_PREFACTOR
        moyal.MARINOV_PREFACTOR = Fraction(1)
        try:
            yield
        finally:
            moyal.MARINOV_PREFACTOR = original
    else:
        raise ValueError(f"unknown mutation {kind!r}; choose from {MUTATIONS}")


def _p(text: str, dim: int = 1) -> PolySymbol:
    return parse_poly(text, dim)


def suite_parser():
    assert _p("0.5*p^2 + 0.25*q^4").render() == "1/4*q^4 + 1/2*p^2"
    assert _p("(q+p)^2") == _p("q^2 + 2*q*p + p^2")
    assert _p("q1*p2 - lq2", 2).render() == _p(_p("q1*p2 - lq2", 2).render(), 2).render()
    for bad, pos in (("q^-1", 2), ("q +", 3), ("x", 0)):
        try:
            _p(bad)
        except PolyParseError as exc:
            assert exc.position == pos, (bad, exc.position)
        else:
            raise AssertionError(f"{bad!r} parsed")


def suite_symbolic():
    rng = random.Random(1)
    for _ in range(20):
        dim = rng.choice((1, 2))
        a, b, c = (random_poly(rng, dim, 3, complex_coeffs=True) for _ in range(3))
        assert a * (b + c) == a * b + a * c
        assert (a * b) * c == a * (b * c)
        assert _p(a.render(), dim) == a


def suite_grassmann():
    t, tb = theta(1), thetabar(1)
    zero = GrassmannElement.zero(1)
    assert g_mul(t, t) == zero and g_mul(tb, tb) == zero
    assert g_mul(t, tb) == -g_mul(tb, t)
    assert berezin_integrate(g_mul(t, tb)) == PolySymbol.one(1)
    assert berezin_integrate(GrassmannElement.scalar(_p("q"))).is_zero()


def suite_moyal():
    q, p = _p("q"), _p("p")
    assert moyal.star_product(q, p).render() == "q*p + 1/2*i*h"
    assert moyal.moyal_bracket(q, p).render() == "1"
    assert moyal.moyal_bracket(_p("q^3"), _p("p^3")) == _p("9*q^2*p^2 - 3/2*h^2")
    rng = random.Random(3)
    for _ in range(10):
        H = random_hamiltonian(rng, 1, 2)
        f = random_poly(rng, 1, 5)
        assert moyal.moyal_bracket(H, f) == moyal.poisson_bracket(H, f)
        A, B = random_poly(rng, 1, 4), random_poly(rng, 1, 4)
        d = moyal.moyal_bracket(A, B) - moyal.poisson_bracket(A, B)
        assert d.hbar_order() >= 2


def dequant_suite_passes(count: int = 30, seed: int = 11, max_degree: int = 5) -> bool:
    """True when every random Hamiltonian dequantises exactly."""
    rng = random.Random(seed)
    for i in range(count):
        H = random_hamiltonian(rng, 1 + i % 2, max_degree)
        rep = moyal.dequantise(H)
        if not (rep.exact and rep.hbar_free_before_integration):
            return False
    return moyal.dequantise(_p("q^4")).exact


def suite_dequantisation():
    assert dequant_suite_passes(), "dequantised Hamiltonian differs from the classical extension"


def suite_bopp():
    rng = random.Random(5)
    half = Fraction(1, 2)
    for _ in range(10):
        H = random_hamiltonian(rng, 1, 4)
        f = random_poly(rng, 1, 4)
        lhs = moyal.lambda_to_operator(moyal.marinov_hamiltonian(H), half, f).scale(2)
        rhs = moyal.moyal_bracket(H, f).scale(CRational(0, 1))
        assert lhs == rhs


def suite_wigner():
    from .wigner import (OperatorMatrix, SpatialGrid, coherent_state, gaussian_wigner, grid_star,
                         observables, weyl_quantize, weyl_symbol, wigner_of_state)
    g = SpatialGrid(65, 20.2, 1.0)
    rng = np.random.default_rng(0)
    A = OperatorMatrix(g, rng.normal(size=(65, 65)) + 1j * rng.normal(size=(65, 65)))
    B = OperatorMatrix(g, rng.normal(size=(65, 65)) + 1j * rng.normal(size=(65, 65)))
    assert np.max(np.abs(weyl_quantize(weyl_symbol(A)).entries - A.entries)) < 1e-10
    prod = weyl_symbol(A @ B).values
    assert np.max(np.abs(grid_star(weyl_symbol(A), weyl_symbol(B)).values - prod)) < 1e-9 * np.max(np.abs(prod))
    psi = coherent_state(g, 0.5, -0.3)
    W = wigner_of_state(psi)
    assert np.max(np.abs(W.values - gaussian_wigner(g, 0.5, -0.3).values)) < 1e-8
    obs = observables(W)
    assert abs(obs.norm - 1) < 1e-10 and abs(obs.purity - 1) < 1e-6


def suite_dynamics():
    from .dynamics import EvolutionConfig, propagate
    from .wigner import SpatialGrid, gaussian_wigner
    g = SpatialGrid(81, 22.56, 1.0)
    H = _p("1/2*q^2 + 1/2*p^2")
    rho0 = gaussian_wigner(g, 1.0, 0.0)
    runs = [propagate(EvolutionConfig(e, H, 0.01, 0.5, g, snapshot_stride=10), rho0) for e in ("moyal", "liouville")]
    assert np.max(np.abs(runs[0].mean_q - runs[1].mean_q)) < 1e-10
    assert abs(runs[0].mean_q[-1] - np.cos(0.5)) < 1e-6
    assert np.max(np.abs(runs[0].column("norm") - 1)) < 1e-10


def suite_oracle():
    from .oracle import SplitHamiltonian, oracle_wigner_trajectory
    from .wigner import SpatialGrid, coherent_state
    g = SpatialGrid(45, 16.8, 1.0)
    H = SplitHamiltonian.from_poly(_p("1/2*p^2 + 1/2*q^2"))
    tr = oracle_wigner_trajectory(coherent_state(g, 1.0, 0.0), H, 0.005, 1.0, 50)
    assert np.max(np.abs(tr.mean_q - np.cos(tr.times))) < 1e-4


def suite_io():
    from .wigner import GridSymbol, SpatialGrid, observables
    g = SpatialGrid(9, 3.0, 0.5)
    sym = GridSymbol(g, np.arange(81.0).reshape(9, 9))
    with tempfile.TemporaryDirectory() as tmp:
        save_symbol(f"{tmp}/s", sym, time=0.25)
        back, meta = load_symbol(f"{tmp}/s")
        assert np.array_equal(back.values, sym.values) and meta["time"] == 0.25
        write_trajectory_csv(f"{tmp}/t.csv", [0.0, 1.0], [observables(sym)] * 2)
        times, recs = read_trajectory_csv(f"{tmp}/t.csv")
        assert list(times) == [0.0, 1.0] and recs[1] == observables(sym)


def suite_mutation():
    for kind in MUTATIONS:
        with mutation(kind):
            caught = not dequant_suite_passes(count=6)
        assert caught, f"mutation {kind!r} went undetected"


SUITES: list[tuple[str, Callable[[], None]]] = [
    ("parser", suite_parser),
    ("symbolic", suite_symbolic),
    ("grassmann", suite_grassmann),
    ("moyal", suite_moyal),
    ("dequantisation", suite_dequantisation),
    ("bopp", suite_bopp),
    ("wigner", suite_wigner),
    ("dynamics", suite_dynamics),
    ("oracle", suite_oracle),
    ("io", suite_io),
    ("mutation", suite_mutation),
]


def run_selftest(filter: str | None = None, mutate: str | None = None,
                 out: Callable[[str], None] = print) -> int:
    """
    Run the suites whose names contain any comma-separated ``filter`` term.

    Returns 0 when all selected suites pass, 1 otherwise. ``mutate`` applies
    one of :data:`MUTATIONS` for the whole run.
    """
    terms = [t.strip() for t in filter.split(",")] if filter else None
    selected = [(n, f) for n, f in SUITES if terms is None or any(t in n for t in terms)]
    if not selected:
        out(f"no suite matches {filter!r}; available: {', '.join(n for n, _ in SUITES)}")
        return 2
    failed = []
    start = time.perf_counter()
    with mutation(mutate):
        for name, fn in selected:
            t0 = time.perf_counter()
            try:
                fn()
                status, detail = "PASS", ""
            except Exception as exc:  # report every failure kind, keep going
                status, detail = "FAIL", f": {type(exc).__name__}: {exc}"
                failed.append(name)
            out(f"{status} {name:<15s} {time.perf_counter() - t0:7.2f} s{detail}")
    total = time.perf_counter() - start
    if failed:
        out(f"selftest FAILED in {total:.1f} s: {', '.join(failed)}")
        return 1
    out(f"selftest passed: {len(selected)} suites in {total:.1f} s")
    return 0
