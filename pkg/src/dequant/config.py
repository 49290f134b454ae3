"""
Run configuration for simulation commands.

Configs are JSON. Bundled experiments (``harmonic``, ``quartic``) ship
with the package and can be referenced by name instead of by path.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .dynamics import ENGINES
from .parser import parse_poly
from .symbolic import PolySymbol
from .wigner import SpatialGrid

__all__ = ["RunConfig", "ConfigError", "load_config", "bundled_configs"]

_DEFAULTS = {
    "hamiltonian": None,
    "grid": {"n_points": 129, "box_length": 16.0, "hbar": 1.0},
    "initial_state": {"q0": 0.0, "p0": 0.0, "sigma_q": None},
    "engines": ["moyal", "liouville"],
    "t_final": 1.0,
    "dt": None,
    "snapshot_stride": 50,
    "keep_snapshots": False,
    "tolerance": {"mean_q": 1e-3, "rho_sup_rel": 1e-3},
    "oracle_refine": 1,
    "oracle_substeps": 1,
    "boundary": "raise",
    "seed": 0,
}


class ConfigError(ValueError):
    """Missing or invalid configuration."""


def bundled_configs() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("dequant.configs").iterdir()
                  if p.name.endswith(".json"))


def _deep_merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(ref: str | None) -> dict:
    """Read a config by path or bundled name; ``None`` gives the defaults."""
    if ref is None:
        return copy.deepcopy(_DEFAULTS)
    path = Path(ref)
    if path.is_file():
        text = path.read_text()
    elif ref in bundled_configs():
        text = resources.files("dequant.configs").joinpath(f"{ref}.json").read_text()
    else:
        raise ConfigError(f"config file not found: {ref} (bundled: {', '.join(bundled_configs())})")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{ref}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{ref}: top level must be an object")
    return _deep_merge(_DEFAULTS, data)


@dataclass
class RunConfig:
    hamiltonian: str
    grid: dict
    initial_state: dict
    engines: list[str]
    t_final: float
    dt: float | None = None
    snapshot_stride: int = 50
    keep_snapshots: bool = False
    tolerance: dict = field(default_factory=lambda: dict(_DEFAULTS["tolerance"]))
    oracle_refine: int = 1
    oracle_substeps: int = 1
    boundary: str = "raise"
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = _deep_merge(_DEFAULTS, d)
        unknown = set(d) - set(_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if not d["hamiltonian"]:
            raise ConfigError("config needs a 'hamiltonian'")
        engines = d["engines"]
        if isinstance(engines, str):
            engines = list(ENGINES) if engines == "both" else [engines]
        bad = [e for e in engines if e not in ENGINES]
        if bad or not engines:
            raise ConfigError(f"engines must be drawn from {ENGINES}, got {engines}")
        d["engines"] = list(engines)
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {
            "hamiltonian": self.hamiltonian,
            "grid": dict(self.grid),
            "initial_state": dict(self.initial_state),
            "engines": list(self.engines),
            "t_final": self.t_final,
            "dt": self.dt,
            "snapshot_stride": self.snapshot_stride,
            "keep_snapshots": self.keep_snapshots,
            "tolerance": dict(self.tolerance),
            "oracle_refine": self.oracle_refine,
            "oracle_substeps": self.oracle_substeps,
            "boundary": self.boundary,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def validate(self):
        try:
            self.spatial_grid()
            self.poly()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not (isinstance(self.t_final, (int, float)) and self.t_final > 0):
            raise ConfigError("t_final must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.boundary not in ("raise", "record"):
            raise ConfigError("boundary must be 'raise' or 'record'")

    def spatial_grid(self) -> SpatialGrid:
        g = self.grid
        return SpatialGrid(int(g["n_points"]), float(g["box_length"]), float(g["hbar"]))

    def poly(self) -> PolySymbol:
        return parse_poly(self.hamiltonian, 1)
