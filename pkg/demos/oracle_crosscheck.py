"""Time-domain cross-check: simulated b_X periodogram against the analytic spectrum.

Run: python demos/oracle_crosscheck.py   (about 10 s)
"""

import numpy as np

from polaritron import presets
from polaritron.constants import to_khz
from polaritron.langevin import build_drift_matrix, eigensolve
from polaritron.oracle import TrajectoryConfig, psd, scaled_bath, simulate_classical
from polaritron.spectra import FrequencyGrid, mechanical_spectrum

p = scaled_bath(presets.moderate_vacuum(-120.0), 1e4)
cfg = TrajectoryConfig.for_params(p, 1.01, seed=1, burn_in_time=5e-3, sample_dt=4e-7)
traj = simulate_classical(p, cfg)
spec = psd(traj.b_x, int(round(1e-2 / traj.sample_dt)), traj.sample_dt)

sol = eigensolve(build_drift_matrix(p))
k = sol.index("phonon-like")
mask = np.abs(spec.omega - sol.frequencies[k]) <= 20 * sol.half_widths[k]
w = spec.omega[mask]
analytic, _ = mechanical_spectrum(p, 0.0, FrequencyGrid(w[0], w[-1], w.size),
                                  tail_threshold=None, classical=True)
rel = spec.values[mask] / analytic.values - 1
print(f"{cfg.n_steps} steps of {cfg.dt:.3g} s, {spec.meta['segments']} segments")
print(f"<|b_X|^2> = {np.mean(np.abs(traj.b_x) ** 2):.1f}")
print(f"RMS deviation from the analytic spectrum over "
      f"{to_khz(w[0]):.1f}..{to_khz(w[-1]):.1f} kHz: {100 * np.sqrt(np.mean(rel ** 2)):.1f}%")
