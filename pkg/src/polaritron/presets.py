"""Ready-made parameter sets for the experimental operating points.

All functions take the detuning in kHz (ordinary frequency, negative on
the red side) and return :class:`~polaritron.model.PhysicalParams`.
"""

from __future__ import annotations

import math
from functools import lru_cache

from scipy.optimize import brentq

from .constants import khz, to_khz
from .langevin import weak_coupling_approx
from .model import EnvironmentSpec, PhysicalParams, derive_couplings, params_from_environment

KAPPA_KHZ = 57.0
ETA = 0.32
RECOIL_KHZ = (8.9, 4.8)


def two_crossing(delta_khz=-190.0, g_x_khz=29.0, g_y_khz=9.0) -> PhysicalParams:
    """Noiseless coupling set whose dispersion shows both avoided crossings."""
    return PhysicalParams(delta=khz(delta_khz), kappa=khz(KAPPA_KHZ), omega_x0=khz(132.0),
                          omega_y0=khz(117.0), g_x=khz(g_x_khz), g_y=khz(g_y_khz))


def moderate_vacuum(delta_khz=-120.0, pressure=6e-3) -> PhysicalParams:
    """Operating point at a few mPa: gas damping plus recoil heating, room temperature."""
    env = EnvironmentSpec(pressure=pressure, damping_slope=13.0, temperature=293.0,
                          g_total=0.0)
    p = params_from_environment(env, delta=khz(delta_khz), kappa=khz(KAPPA_KHZ),
                                omega_x0=khz(131.6), omega_y0=khz(117.3),
                                gamma_nx=khz(RECOIL_KHZ[0]), gamma_ny=khz(RECOIL_KHZ[1]), eta=ETA)
    return p.replace(g_x=khz(26.7), g_y=khz(9.4))


HIGH_VACUUM_G_KHZ = 30.0
HIGH_VACUUM_THETA_DEG = 72.0
# loaded frequencies observed at -260 kHz detuning, used to recover the bare ones
HIGH_VACUUM_LOADED_KHZ = {"x": 123.0, "y": 118.7}
HIGH_VACUUM_REFERENCE_DELTA_KHZ = -260.0


@lru_cache(maxsize=None)
def high_vacuum_bare_frequencies():
    """Bare frequencies (kHz) whose weak-coupling shifted values at -260 kHz
    detuning match the loaded frequencies seen there."""
    g_x, g_y = derive_couplings(khz(HIGH_VACUUM_G_KHZ), math.radians(HIGH_VACUUM_THETA_DEG))
    base = PhysicalParams(delta=khz(HIGH_VACUUM_REFERENCE_DELTA_KHZ), kappa=khz(KAPPA_KHZ),
                          omega_x0=khz(130.0), omega_y0=khz(120.0), g_x=g_x, g_y=g_y)
    out = {}
    for axis in ("x", "y"):
        target = HIGH_VACUUM_LOADED_KHZ[axis]

        def mismatch(f0, axis=axis, target=target):
            p = base.replace(**{f"omega_{axis}0": khz(f0)})
            return to_khz(weak_coupling_approx(p, axis)[0]) - target

        out[axis] = brentq(mismatch, target, target + 40.0, xtol=1e-9)
    return out["x"], out["y"]


def high_vacuum(delta_khz=-170.0, pressure=3e-5) -> PhysicalParams:
    """Operating point at tens of uPa where the strong-coupling features appear."""
    fx, fy = high_vacuum_bare_frequencies()
    env = EnvironmentSpec(pressure=pressure, damping_slope=13.0, temperature=293.0,
                          theta_pol=math.radians(HIGH_VACUUM_THETA_DEG),
                          g_total=khz(HIGH_VACUUM_G_KHZ))
    return params_from_environment(env, delta=khz(delta_khz), kappa=khz(KAPPA_KHZ),
                                   omega_x0=khz(fx), omega_y0=khz(fy),
                                   gamma_nx=khz(RECOIL_KHZ[0]), gamma_ny=khz(RECOIL_KHZ[1]),
                                   eta=ETA)
