"""
Watching one circuit relax
==========================

Start from the Z-product state and measure random X_e, stars and plaquettes.
Within a few sweeps the TEE settles at -1.
"""

import numpy as np

from tricode.circuit import CircuitConfig, trace

cfg = CircuitConfig(l_x=8, l_y=8, p_x=0.1, p_z=0.0, p_g=0.9, n_snapshots=4, seed=3)
print(f"burn-in {cfg.burn_in_steps} steps, snapshot every {cfg.record_spacing}")

for steps, rec in trace(cfg):
    print(f"{steps:6d}  S_T={rec.s_t:+.0f}  chi_x={rec.chi_x:.3f}  T_loop={rec.t_loop:.2f}")

# average over a handful of trajectories
runs = [trace(cfg, trajectory_id=i) for i in range(20)]
s = np.array([[r.s_t for _, r in run] for run in runs])
print("mean S_T by step:", np.round(s.mean(0), 2))
