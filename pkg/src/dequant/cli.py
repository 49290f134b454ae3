"""
``dequant`` command line.

Exit codes: 0 success, 1 scientific failure (an identity or tolerance does
not hold, or a run hit a numerical guard), 2 usage or input error.
Simulation commands write into ``--out`` or, if unset, into
``$DEQUANT_OUT`` (default ``./dequant-out``), and echo the effective config
there as ``config.json``.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from pathlib import Path

import numpy as np

from . import moyal
from .config import ConfigError, RunConfig, bundled_configs, load_config
from .dynamics import EvolutionConfig, InstabilityError, default_dt, propagate
from .io import save_state, save_symbol
from .oracle import NotSplitError, SplitHamiltonian, oracle_wigner_trajectory
from .parser import PolyParseError, parse_poly
from .sampling import random_hamiltonian
from .selftest import MUTATIONS, run_selftest
from .wigner import (
    BOUNDARY_TOL,
    BoundaryMassError,
    SpatialGrid,
    coherent_state,
    observables,
    oscillator_eigenstate,
    wigner_of_state,
)

__all__ = ["main", "build_parser", "OUT_ENV"]

OUT_ENV = "DEQUANT_OUT"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _out_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUT_ENV) or "dequant-out")


def _parse(text: str, dim: int = 1):
    try:
        return parse_poly(text, dim)
    except PolyParseError as exc:
        raise UsageError(f"cannot parse {text!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# symbolic commands
# ---------------------------------------------------------------------------

def cmd_verify_dequant(args) -> int:
    if args.hamiltonian and args.random:
        raise UsageError("use either --hamiltonian or --random")
    if args.hamiltonian:
        hams = [_parse(h, args.dim) for h in args.hamiltonian]
    elif args.random:
        rng = random.Random(args.seed)
        hams = [random_hamiltonian(rng, args.dim, args.max_degree) for _ in range(args.random)]
    else:
        raise UsageError("give --hamiltonian TEXT or --random COUNT")
    reports = [moyal.dequantise(H) for H in hams]
    if args.json:
        print(json.dumps([r.to_dict() for r in reports], indent=2))
    elif len(reports) == 1:
        r = reports[0]
        print(f"H                      = {r.hamiltonian.render()}")
        print(f"Marinov H_B^h          = {r.marinov.render()}")
        print(f"shifted (theta-thetabar) = {r.shifted.render()}")
        print(f"Berezin integral       = {r.berezin.render()}")
        print(f"classical H_B          = {r.classical.render()}")
        print(f"h-free before integration: {r.hbar_free_before_integration}")
        print(f"verdict: {r.verdict}")
    else:
        bad = [r for r in reports if not r.exact]
        for r in bad:
            print(f"mismatch: H = {r.hamiltonian.render()}  difference = {r.difference.render()}")
        print(f"{len(reports) - len(bad)}/{len(reports)} exact-equal (N={args.dim}, max degree {args.max_degree}, seed {args.seed})")
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps([r.to_dict() for r in reports], indent=2) + "\n")
    return EXIT_OK if all(r.exact for r in reports) else EXIT_FAIL


def _operands(args) -> tuple[str, str]:
    a = args.a if args.a is not None else args.a_pos
    b = args.b if args.b is not None else args.b_pos
    if a is None or b is None:
        raise UsageError("two operands are required (positional or --a/--b)")
    return a, b


def _binary(kind: str, a_text: str, b_text: str, dim: int) -> int:
    A, B = _parse(a_text, dim), _parse(b_text, dim)
    fn = {"star": moyal.star_product, "moyal": moyal.moyal_bracket, "poisson": moyal.poisson_bracket}[kind]
    print(fn(A, B).render())
    return EXIT_OK


def cmd_star(args) -> int:
    return _binary("star", *_operands(args), args.dim)


def cmd_bracket(args) -> int:
    return _binary(args.kind, *_operands(args), args.dim)


def cmd_marinov(args) -> int:
    H = _parse(args.hamiltonian, args.dim)
    if args.kind in ("marinov", "both"):
        print(f"marinov   = {moyal.marinov_hamiltonian(H).body.render()}")
    if args.kind in ("classical", "both"):
        print(f"classical = {moyal.classical_extended_hamiltonian(H).body.render()}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulation commands
# ---------------------------------------------------------------------------

def _run_config(args) -> RunConfig:
    try:
        raw = load_config(args.config)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    if getattr(args, "hamiltonian", None):
        raw["hamiltonian"] = args.hamiltonian
    for key, flag in (("n_points", "n_points"), ("box_length", "box_length"), ("hbar", "hbar")):
        if getattr(args, flag, None) is not None:
            raw["grid"][key] = getattr(args, flag)
    for key in ("q0", "p0", "sigma_q"):
        if getattr(args, key, None) is not None:
            raw["initial_state"][key] = getattr(args, key)
    for key in ("dt", "t_final", "snapshot_stride"):
        if getattr(args, key, None) is not None:
            raw[key] = getattr(args, key)
    if getattr(args, "engine", None):
        raw["engines"] = ["moyal", "liouville"] if args.engine == "both" else [args.engine]
    if getattr(args, "snapshots", False):
        raw["keep_snapshots"] = True
    if getattr(args, "tolerance", None) is not None:
        raw["tolerance"]["rho_sup_rel"] = args.tolerance
    try:
        return RunConfig.from_dict(raw)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc


def _initial(cfg: RunConfig, grid: SpatialGrid):
    s = cfg.initial_state
    psi = coherent_state(grid, float(s["q0"]), float(s["p0"]), s.get("sigma_q"))
    return psi, wigner_of_state(psi)


def _prepare_out(args, cfg: RunConfig) -> Path:
    """Create the output directory and echo the effective config into it."""
    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.to_json())
    return out


def _dt(cfg: RunConfig, engine: str, H, grid) -> float:
    if cfg.dt is not None:
        return float(cfg.dt)
    # one step size for every engine so recorded times line up
    return min(default_dt(e, H, grid) for e in set(cfg.engines) | {engine})


def _summary(name: str, tr) -> str:
    norm = tr.column("norm")
    pur = tr.column("purity")
    return (f"{name:<9s} steps={tr.meta['n_steps']} dt={tr.meta['dt']:.4e} "
            f"|d norm|={np.max(np.abs(norm - norm[0])):.2e} |d purity|={np.max(np.abs(pur - pur[0])):.2e} "
            f"min={np.min(tr.column('min_value')):.3e} max negativity={np.max(tr.column('negativity')):.3e} "
            f"final <q>={tr.mean_q[-1]:.6f}")


def cmd_evolve(args) -> int:
    cfg = _run_config(args)
    grid, H = cfg.spatial_grid(), cfg.poly()
    dt = cfg.dt = _dt(cfg, cfg.engines[0], H, grid)
    out = _prepare_out(args, cfg)
    _, rho0 = _initial(cfg, grid)
    runs = {}
    for engine in cfg.engines:
        ec = EvolutionConfig(engine, H, dt, float(cfg.t_final), grid, int(cfg.snapshot_stride), cfg.keep_snapshots,
                             boundary=cfg.boundary)
        t0 = time.perf_counter()
        try:
            tr = propagate(ec, rho0)
        except (BoundaryMassError, InstabilityError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL
        runs[engine] = tr
        tr.to_csv(out / f"{engine}.csv")
        if cfg.keep_snapshots:
            tr.save_snapshots(out / f"snapshots_{engine}")
        print(_summary(engine, tr) + f" ({time.perf_counter() - t0:.1f} s)")
        edge = tr.meta["max_boundary_mass"]
        if edge > BOUNDARY_TOL:
            print(f"warning: {engine}: boundary mass reached {edge:.3e} (limit {BOUNDARY_TOL:.0e}, recorded only)")
    if len(runs) == 2:
        d = np.max(np.abs(runs["moyal"].mean_q - runs["liouville"].mean_q))
        print(f"max |<q>_moyal - <q>_liouville| = {d:.3e}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_oracle_compare(args) -> int:
    cfg = _run_config(args)
    grid, H = cfg.spatial_grid(), cfg.poly()
    try:
        split = SplitHamiltonian.from_poly(H)
    except NotSplitError as exc:
        raise UsageError(f"oracle-compare needs H = p^2/2m + V(q): {exc}") from exc
    dt = cfg.dt = _dt(cfg, "moyal", H, grid)
    out = _prepare_out(args, cfg)
    psi0, rho0 = _initial(cfg, grid)
    ec = EvolutionConfig("moyal", H, dt, float(cfg.t_final), grid, int(cfg.snapshot_stride), keep_snapshots=True,
                         boundary=cfg.boundary)
    try:
        tr = propagate(ec, rho0)
    except (BoundaryMassError, InstabilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    orc = oracle_wigner_trajectory(psi0, split, dt, float(cfg.t_final), int(cfg.snapshot_stride),
                                   refine=int(cfg.oracle_refine), substeps=int(cfg.oracle_substeps),
                                   keep_snapshots=True)
    scale = float(np.max(np.abs(rho0.values)))
    rho_sup = max(float(np.max(np.abs(a.values - b.values))) for a, b in zip(tr.snapshots, orc.snapshots)) / scale
    mean_sup = float(np.max(np.abs(tr.mean_q - orc.mean_q)))
    tol = cfg.tolerance
    ok = rho_sup <= float(tol["rho_sup_rel"]) and mean_sup <= float(tol["mean_q"])
    report = {
        "hamiltonian": H.render(),
        "dt": tr.meta["dt"],
        "n_steps": tr.meta["n_steps"],
        "rho_sup_diff_rel": rho_sup,
        "mean_q_sup_diff": mean_sup,
        "tolerance": tol,
        "within_tolerance": ok,
    }
    tr.to_csv(out / "moyal.csv")
    orc.to_csv(out / "oracle.csv")
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"sup |rho_moyal - rho_oracle| / max|rho0| = {rho_sup:.3e} (tolerance {tol['rho_sup_rel']:g})")
    print(f"sup |<q>_moyal - <q>_oracle|            = {mean_sup:.3e} (tolerance {tol['mean_q']:g})")
    print("PASS" if ok else "FAIL: tolerance exceeded")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_wigner(args) -> int:
    try:
        grid = SpatialGrid(args.n_points, args.box_length, args.hbar)
        grid.require_odd()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.state == "coherent":
        psi = coherent_state(grid, args.q0, args.p0, args.sigma_q)
    else:
        psi = oscillator_eigenstate(grid, args.level)
    W = wigner_of_state(psi, method=args.method)
    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_symbol(out / "wigner", W, kind="wigner", time=0.0)
    save_state(out / "state", psi, time=0.0)
    obs = observables(W)
    print(json.dumps({f: getattr(obs, f) for f in obs.FIELDS}, indent=2))
    return EXIT_OK


def cmd_selftest(args) -> int:
    return run_selftest(filter=args.filter, mutate=args.mutate)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_sim_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help=f"JSON config path or bundled name ({', '.join(bundled_configs())})")
    p.add_argument("--hamiltonian", help="H(q, p) in polynomial syntax")
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--box-length", dest="box_length", type=float)
    p.add_argument("--hbar", type=float)
    p.add_argument("--q0", type=float)
    p.add_argument("--p0", type=float)
    p.add_argument("--sigma-q", dest="sigma_q", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", dest="t_final", type=float)
    p.add_argument("--stride", dest="snapshot_stride", type=int)
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./dequant-out)")


def _add_operands(p: argparse.ArgumentParser):
    p.add_argument("a_pos", nargs="?", metavar="A")
    p.add_argument("b_pos", nargs="?", metavar="B")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--dim", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dequant", description="Phase-space quantum mechanics toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-dequant", help="check the Grassmann dequantisation identity")
    p.add_argument("--hamiltonian", action="append", help="may be repeated")
    p.add_argument("--random", type=int, metavar="COUNT")
    p.add_argument("--max-degree", dest="max_degree", type=int, default=6)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="print reports as JSON")
    p.add_argument("--out", help="also write the JSON reports to this file")
    p.set_defaults(func=cmd_verify_dequant)

    p = sub.add_parser("star", help="exact star product A * B")
    _add_operands(p)
    p.set_defaults(func=cmd_star)

    p = sub.add_parser("bracket", help="exact Moyal or Poisson bracket {A, B}")
    _add_operands(p)
    p.add_argument("--kind", choices=("moyal", "poisson", "star"), default="moyal")
    p.set_defaults(func=cmd_bracket)

    p = sub.add_parser("marinov", help="extended Hamiltonians of H")
    p.add_argument("--hamiltonian", required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--kind", choices=("marinov", "classical", "both"), default="both")
    p.set_defaults(func=cmd_marinov)

    p = sub.add_parser("evolve", help="propagate a Gaussian with the moyal and/or liouville engine")
    _add_sim_flags(p)
    p.add_argument("--engine", choices=("moyal", "liouville", "both"))
    p.add_argument("--snapshots", action="store_true", help="also write grid snapshots")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("oracle-compare", help="moyal engine against the split-operator Schrödinger oracle")
    _add_sim_flags(p)
    p.add_argument("--tolerance", type=float, help="relative sup tolerance on rho")
    p.set_defaults(func=cmd_oracle_compare)

    p = sub.add_parser("wigner", help="Wigner function of a coherent state or oscillator eigenstate")
    p.add_argument("--state", choices=("coherent", "eigenstate"), default="coherent")
    p.add_argument("--q0", type=float, default=0.0)
    p.add_argument("--p0", type=float, default=0.0)
    p.add_argument("--sigma-q", dest="sigma_q", type=float)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--n-points", dest="n_points", type=int, default=129)
    p.add_argument("--box-length", dest="box_length", type=float, default=28.47)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--method", choices=("midpoint", "lattice"), default="midpoint")
    p.add_argument("--out")
    p.set_defaults(func=cmd_wigner)

    p = sub.add_parser("selftest", help="fast invariant suite")
    p.add_argument("--filter", help="comma-separated suite name fragments")
    p.add_argument("--mutate", choices=MUTATIONS, help="corrupt a convention to check the suite catches it")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:  # invalid numeric input surfaced by the library
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
