import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polaritron.constants import HBAR, K_B, TWO_PI, khz
from polaritron.model import (
    EnvironmentSpec,
    PhysicalParams,
    decoherence_budget,
    derive_couplings,
    gas_damping,
    params_from_environment,
    rin_heating,
    thermal_occupation,
)


def test_invalid_fields_are_named():
    with pytest.raises(ValueError, match="kappa"):
        PhysicalParams(delta=0.0, kappa=-1.0, omega_x0=1.0, omega_y0=1.0)
    with pytest.raises(ValueError, match="g_y"):
        PhysicalParams(delta=0.0, kappa=1.0, omega_x0=1.0, omega_y0=1.0, g_y=-2.0)
    with pytest.raises(ValueError, match="eta"):
        PhysicalParams(delta=0.0, kappa=1.0, omega_x0=1.0, omega_y0=1.0, eta=1.5)
    with pytest.raises(ValueError, match="delta"):
        PhysicalParams(delta=float("nan"), kappa=1.0, omega_x0=1.0, omega_y0=1.0)


def test_replace_and_mode_accessor():
    p = PhysicalParams(delta=-1.0, kappa=2.0, omega_x0=3.0, omega_y0=4.0, g_x=5.0, gamma_ny=6.0)
    q = p.replace(g_x=7.0)
    assert q.g_x == 7.0 and p.g_x == 5.0
    assert p.mode("x") == (3.0, 0.0, 5.0, 0.0, 0.0)
    assert p.mode("Y")[4] == 6.0
    with pytest.raises(ValueError):
        p.mode("z")


def test_couplings_from_polarization_angle():
    g = khz(30.0)
    gx, gy = derive_couplings(g, math.radians(72.0))
    assert gx / khz(1) == pytest.approx(27.135, abs=1e-3)
    assert gy / khz(1) == pytest.approx(8.817, abs=1e-3)
    assert derive_couplings(g, math.pi / 2) == pytest.approx((g, 0.0), abs=1e-9)
    assert derive_couplings(g, 0.0) == (0.0, 0.0)
    with pytest.raises(ValueError):
        derive_couplings(g, 2.0)


@given(st.floats(0.0, math.pi / 2))
def test_couplings_add_in_quadrature_to_g_sin(theta):
    gx, gy = derive_couplings(1.0, theta)
    assert math.hypot(gx, gy) == pytest.approx(math.sin(theta), abs=1e-12)


def test_gas_damping_slope():
    assert gas_damping(6e-3, 13.0) == pytest.approx(TWO_PI * 0.078)
    with pytest.raises(ValueError):
        gas_damping(-1.0, 13.0)


def test_thermal_occupation_limits():
    w = khz(130.0)
    kt = K_B * 293.0 / (HBAR * w)
    assert thermal_occupation(w, 293.0) == pytest.approx(kt - 0.5, rel=1e-9)
    assert thermal_occupation(w, 0.0) == 0.0
    # deep quantum regime: exp(-hbar w / kT)
    t = HBAR * w / (K_B * 20.0)
    assert thermal_occupation(w, t) == pytest.approx(math.exp(-20.0), rel=1e-8)
    arr = thermal_occupation(np.array([w, 2 * w]), 293.0)
    assert arr.shape == (2,) and arr[0] > arr[1]


@given(st.floats(1.0, 1e4), st.floats(1.0, 1e4))
def test_thermal_occupation_increases_with_temperature(t1, t2):
    lo, hi = sorted((t1, t2))
    assert thermal_occupation(khz(100.0), lo) <= thermal_occupation(khz(100.0), hi)


def test_rin_heating_formula():
    assert rin_heating(2.0, 3.0) == pytest.approx(0.25 * 4.0 * 3.0)


def test_decoherence_budget_sums_and_coherence_flag():
    p = PhysicalParams(delta=0.0, kappa=1.0, omega_x0=khz(130.0), omega_y0=khz(117.0),
                       gamma_mx=2.0, n_th_x=10.0, gamma_nx=5.0, g_x=20.0)
    b = decoherence_budget(p, axis="x")
    assert (b.thermal, b.recoil, b.total) == (20.0, 5.0, 25.0)
    assert b.coherent  # 2g = 40 > 25
    env = EnvironmentSpec(pressure=1e-3, s_rin=1e-12)
    with_rin = decoherence_budget(p, env, "x", include_rin=True)
    assert with_rin.rin == pytest.approx(rin_heating(p.omega_x0, 1e-12))
    assert with_rin.total == pytest.approx(25.0 + with_rin.rin)
    with pytest.raises(ValueError):
        decoherence_budget(p, None, "x", include_rin=True)
    assert b.khz()["total"] == pytest.approx(25.0 / khz(1))


def test_low_pressure_decoherence_is_dominated_by_gas_plus_recoil():
    env = EnvironmentSpec(pressure=3e-5)
    p = params_from_environment(env, delta=khz(-170.0), kappa=khz(57.0), omega_x0=khz(130.3),
                                omega_y0=khz(119.4), gamma_nx=khz(8.9), gamma_ny=khz(4.8))
    b = decoherence_budget(p, axis="x")
    assert b.thermal / khz(1) == pytest.approx(18.1, rel=0.02)
    assert b.total / khz(1) == pytest.approx(27.0, rel=0.02)
    assert p.gamma_mx == p.gamma_my == gas_damping(3e-5, 13.0)


def test_environment_validation():
    with pytest.raises(ValueError):
        EnvironmentSpec(pressure=-1.0)
    with pytest.raises(ValueError):
        EnvironmentSpec(pressure=1.0, theta_pol=3.0)
