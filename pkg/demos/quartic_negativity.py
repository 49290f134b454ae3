"""
Evolve a Gaussian in the quartic well with both engines and the
Schrodinger oracle, then print <q>(t) and the most negative Wigner value.
Takes about 40 s.

    python3 demos/quartic_negativity.py
"""

import numpy as np

from dequant.config import RunConfig, load_config
from dequant.dynamics import EvolutionConfig, default_dt, propagate
from dequant.oracle import SplitHamiltonian, oracle_wigner_trajectory
from dequant.wigner import coherent_state, wigner_of_state

cfg = RunConfig.from_dict(load_config("quartic"))
grid, H = cfg.spatial_grid(), cfg.poly()
dt = min(default_dt(e, H, grid) for e in ("moyal", "liouville"))
s = cfg.initial_state
psi0 = coherent_state(grid, s["q0"], s["p0"], s["sigma_q"])
rho0 = wigner_of_state(psi0)

runs = {}
for engine in ("moyal", "liouville"):
    ec = EvolutionConfig(engine, H, dt, cfg.t_final, grid, cfg.snapshot_stride, boundary="record")
    runs[engine] = propagate(ec, rho0)
runs["oracle"] = oracle_wigner_trajectory(psi0, SplitHamiltonian.from_poly(H), dt, cfg.t_final,
                                          cfg.snapshot_stride, substeps=cfg.oracle_substeps)

print(f"H = {H}, dt = {dt:.3e}, {runs['moyal'].meta['n_steps']} steps\n")
print("     t   <q> moyal   <q> oracle  <q> liouville   min moyal  min liouville")
m, o, l = runs["moyal"], runs["oracle"], runs["liouville"]
for k, t in enumerate(m.times):
    print(f"{t:6.3f}  {m.mean_q[k]:10.6f}  {o.mean_q[k]:10.6f}  {l.mean_q[k]:12.6f}"
          f"  {m.column('min_value')[k]:10.3e}  {l.column('min_value')[k]:12.3e}")

print(f"\nmax |<q>_moyal - <q>_oracle|    = {np.max(np.abs(m.mean_q - o.mean_q)):.2e}")
print(f"max |<q>_moyal - <q>_liouville| = {np.max(np.abs(m.mean_q - l.mean_q)):.2e}")
