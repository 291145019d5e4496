"""Physical parameters of the cavity + 2D levitated-particle system.

Everything in here is stored as angular frequency (rad/s). Use
:func:`polaritron.constants.khz` to convert from the kHz values quoted
on plot axes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .constants import HBAR, K_B, TWO_PI


@dataclass(frozen=True)
class PhysicalParams:
    """Full parameter set of the linearized three-oscillator model.

    Attributes
    ----------
    delta : float
        Laser-cavity detuning (rad/s), negative on the red side.
    kappa : float
        Cavity decay rate (rad/s).
    omega_x0, omega_y0 : float
        Bare mechanical frequencies (rad/s).
    gamma_mx, gamma_my : float
        Gas damping rates (rad/s).
    g_x, g_y : float
        Optomechanical coupling rates (rad/s).
    n_th_x, n_th_y : float
        Thermal bath occupations.
    gamma_nx, gamma_ny : float
        Extra decoherence rates, e.g. recoil heating (rad/s).
    eta : float
        Total detection efficiency.
    omega_lo : float
        Heterodyne local-oscillator offset (rad/s).
    """

    delta: float
    kappa: float
    omega_x0: float
    omega_y0: float
    gamma_mx: float = 0.0
    gamma_my: float = 0.0
    g_x: float = 0.0
    g_y: float = 0.0
    n_th_x: float = 0.0
    n_th_y: float = 0.0
    gamma_nx: float = 0.0
    gamma_ny: float = 0.0
    eta: float = 1.0
    omega_lo: float = TWO_PI * 1.1e6

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa!r}")
        for name in ("omega_x0", "omega_y0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("gamma_mx", "gamma_my", "g_x", "g_y", "n_th_x", "n_th_y",
                     "gamma_nx", "gamma_ny"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta!r}")

    def replace(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)

    def mode(self, axis: str):
        """Return ``(omega0, gamma_m, g, n_th, gamma_n)`` for axis 'x' or 'y'."""
        axis = axis.lower()
        if axis not in ("x", "y"):
            raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
        return (getattr(self, f"omega_{axis}0"), getattr(self, f"gamma_m{axis}"),
                getattr(self, f"g_{axis}"), getattr(self, f"n_th_{axis}"),
                getattr(self, f"gamma_n{axis}"))

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EnvironmentSpec:
    pressure: float  # Pa
    temperature: float = 293.0  # K
    damping_slope: float = 13.0  # Hz / Pa, ordinary frequency
    theta_pol: float = math.radians(72.0)
    g_total: float = TWO_PI * 30e3
    s_rin: float = 0.0  # 1/Hz

    def __post_init__(self):
        if self.pressure < 0:
            raise ValueError("pressure must be >= 0")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if not 0 <= self.theta_pol <= math.pi / 2:
            raise ValueError("theta_pol must lie in [0, pi/2]")


@dataclass(frozen=True)
class DecoherenceBudget:
    thermal: float
    recoil: float
    rin: float
    total: float
    coupling: float
    coherent: bool  # 2g > total

    def khz(self) -> dict:
        """Rates as ordinary frequencies in kHz (for reports)."""
        return {k: getattr(self, k) / (TWO_PI * 1e3)
                for k in ("thermal", "recoil", "rin", "total", "coupling")}


def derive_couplings(g_total, theta_pol):
    """Split the bare coherent-scattering rate into the X and Y couplings.

    ``theta_pol`` is the angle between the cavity axis and the tweezer
    polarization; X is perpendicular to the polarization.
    """
    if g_total < 0:
        raise ValueError("g_total must be >= 0")
    if not 0 <= theta_pol <= math.pi / 2:
        raise ValueError(f"theta_pol must lie in [0, pi/2], got {theta_pol!r}")
    s = math.sin(theta_pol)
    return g_total * s * s, g_total * math.cos(theta_pol) * s


def gas_damping(pressure, damping_slope):
    """Gas damping rate (rad/s) for a slope given in Hz/Pa."""
    if pressure < 0:
        raise ValueError("pressure must be >= 0")
    return TWO_PI * damping_slope * pressure


def thermal_occupation(omega, temperature):
    """Bose-Einstein occupation of a bath mode at angular frequency ``omega``.

    Works elementwise on arrays. ``temperature == 0`` gives 0.
    """
    omega = np.asarray(omega, dtype=float)
    temperature = np.asarray(temperature, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be > 0")
    if np.any(temperature < 0):
        raise ValueError("temperature must be >= 0")
    with np.errstate(divide="ignore", over="ignore"):
        x = HBAR * omega / (K_B * temperature)
        n = 1.0 / np.expm1(x)
    n = np.where(np.isfinite(x), n, 0.0)
    return float(n) if n.ndim == 0 else n


def rin_heating(omega, s_rin):
    """Parametric heating rate 0.25 * omega^2 * S_eps (1/s) for RIN ``s_rin`` in 1/Hz."""
    return 0.25 * omega * omega * s_rin


def decoherence_budget(params: PhysicalParams, env: EnvironmentSpec | None = None,
                       axis: str = "x", include_rin: bool = False) -> DecoherenceBudget:
    """Total decoherence rate of one mechanical mode.

    thermal = n_th * gamma_m, recoil = gamma_n, and the intensity-noise
    term is added only when ``include_rin`` is set (needs ``env``).
    """
    omega0, gamma_m, g, n_th, gamma_n = params.mode(axis)
    thermal = n_th * gamma_m
    rin = 0.0
    if include_rin:
        if env is None:
            raise ValueError("include_rin requires an EnvironmentSpec")
        rin = rin_heating(omega0, env.s_rin)
    total = thermal + gamma_n + rin
    return DecoherenceBudget(thermal=thermal, recoil=gamma_n, rin=rin, total=total,
                             coupling=g, coherent=bool(2 * g > total))


def params_from_environment(env: EnvironmentSpec, *, delta, kappa, omega_x0, omega_y0,
                            gamma_nx=0.0, gamma_ny=0.0, eta=1.0,
                            omega_lo=TWO_PI * 1.1e6) -> PhysicalParams:
    """Build :class:`PhysicalParams` with damping, occupations and couplings
    derived from the environment."""
    gamma_m = gas_damping(env.pressure, env.damping_slope)
    g_x, g_y = derive_couplings(env.g_total, env.theta_pol)
    return PhysicalParams(
        delta=delta, kappa=kappa, omega_x0=omega_x0, omega_y0=omega_y0,
        gamma_mx=gamma_m, gamma_my=gamma_m, g_x=g_x, g_y=g_y,
        n_th_x=thermal_occupation(omega_x0, env.temperature),
        n_th_y=thermal_occupation(omega_y0, env.temperature),
        gamma_nx=gamma_nx, gamma_ny=gamma_ny, eta=eta, omega_lo=omega_lo)
