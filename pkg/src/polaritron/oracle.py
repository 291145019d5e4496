"""Time-domain stochastic integration of the classical equations of motion.

The classical fields ``a``, ``b_X``, ``b_Y`` obey

    da/dt   = (i delta - kappa/2) a + i g_X (b_X + b_X*) + i g_Y (b_Y + b_Y*)
    db_j/dt = (-i Omega_j - Gamma_mj/2) b_j + i g_j (a + a*) + xi_j

with complex white noise ``<xi_j(t) xi_j*(t')> = (Gamma_mj n_j + Gamma_nj) delta(t - t')``.
Vacuum fluctuations are dropped, so results agree with the quantum
spectra only up to corrections of relative order ``1 / n``. The drift is
built here from the equations above, independently of the drift matrix
used for the analytic spectra.

The state is integrated as the real vector
``(Re a, Im a, Re b_X, Im b_X, Re b_Y, Im b_Y)`` with an exponential
Euler-Maruyama scheme: the linear drift is propagated exactly over each
step, and each noise increment enters at mid-step. In the eigenbasis of
the drift this is a bank of first-order recursions, evaluated with
``scipy.signal.lfilter``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter, welch

from .constants import TWO_PI
from .langevin import UnstableSystemError
from .model import PhysicalParams
from .spectra import FrequencyGrid, Spectrum

CHUNK = 1 << 18


class ClassicalValidityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TrajectoryConfig:
    """Integration settings.

    ``decimate`` keeps every ``decimate``-th sample of the post-burn-in
    trajectory. ``initial`` is an optional complex ``(a, b_X, b_Y)``.
    ``allow_short`` lifts the 50-damping-time minimum run length.
    """

    dt: float
    n_steps: int
    seed: int = 0
    burn_in: int = 0
    decimate: int = 1
    initial: tuple | None = None
    allow_short: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1 or self.burn_in < 0 or self.decimate < 1:
            raise ValueError("n_steps >= 1, burn_in >= 0 and decimate >= 1 are required")

    @classmethod
    def for_params(cls, params, duration, *, seed=0, burn_in_time=0.0, sample_dt=None,
                   **kwargs):
        """Config with the largest allowed ``dt`` for ``params`` and the
        requested post-burn-in ``duration`` (s)."""
        dt = max_timestep(params) * 0.999
        decimate = max(1, int(sample_dt // dt)) if sample_dt else 1
        n_steps = int(math.ceil(duration / dt / decimate)) * decimate
        return cls(dt=dt, n_steps=n_steps, seed=seed, burn_in=int(math.ceil(burn_in_time / dt)),
                   decimate=decimate, **kwargs)

    def validate(self, params):
        limit = max_timestep(params)
        if self.dt >= limit:
            raise ValueError(f"dt = {self.dt:.3g} s must be below 0.05 / fastest rate = {limit:.3g} s")
        if not self.allow_short:
            need = 50.0 / slowest_energy_decay(params)
            if self.n_steps * self.dt < need:
                raise ValueError(f"run of {self.n_steps * self.dt:.3g} s is shorter than 50 damping "
                                 f"times ({need:.3g} s); set allow_short to override")


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    a: np.ndarray
    b_x: np.ndarray
    b_y: np.ndarray

    @property
    def sample_dt(self):
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else float("nan")


def max_timestep(params: PhysicalParams):
    fastest = max(params.kappa, params.omega_x0, params.omega_y0, abs(params.delta))
    return 0.05 / fastest


def classical_drift(params: PhysicalParams) -> np.ndarray:
    """Real 6x6 matrix ``M`` with ``dr/dt = M r`` for the noiseless equations."""
    p = params

    def rhs(a, bx, by):
        da = (1j * p.delta - p.kappa / 2) * a + 1j * p.g_x * (bx + bx.conjugate()) \
            + 1j * p.g_y * (by + by.conjugate())
        dbx = (-1j * p.omega_x0 - p.gamma_mx / 2) * bx + 1j * p.g_x * (a + a.conjugate())
        dby = (-1j * p.omega_y0 - p.gamma_my / 2) * by + 1j * p.g_y * (a + a.conjugate())
        return da, dbx, dby

    m = np.zeros((6, 6))
    for col in range(6):
        r = np.zeros(6)
        r[col] = 1.0
        z = r[0::2] + 1j * r[1::2]
        dz = np.array(rhs(*z))
        m[0::2, col] = dz.real
        m[1::2, col] = dz.imag
    return m


def slowest_energy_decay(params) -> float:
    """Smallest energy decay rate ``-2 Re(lambda)`` of the classical drift (1/s)."""
    lam = np.linalg.eigvals(classical_drift(params))
    return float(-2 * lam.real.max())


def scaled_bath(params: PhysicalParams, n_th: float) -> PhysicalParams:
    """Set both bath occupations to ``n_th`` while keeping each thermal
    decoherence rate ``Gamma_m * n_th`` fixed.

    The gas damping grows by the inverse factor, so the heating of the
    original operating point is preserved while the bath occupation
    enters the range where the classical equations are accurate.
    """
    if n_th <= 0:
        raise ValueError("n_th must be positive")
    if params.n_th_x <= 0 or params.n_th_y <= 0:
        raise ValueError("scaled_bath needs positive bath occupations")
    return params.replace(n_th_x=n_th, n_th_y=n_th,
                          gamma_mx=params.gamma_mx * params.n_th_x / n_th,
                          gamma_my=params.gamma_my * params.n_th_y / n_th)


def noise_std(params) -> np.ndarray:
    """Per-component standard deviation of the real noise (per sqrt(s))."""
    vx = params.gamma_mx * params.n_th_x + params.gamma_nx
    vy = params.gamma_my * params.n_th_y + params.gamma_ny
    sx, sy = math.sqrt(vx / 2), math.sqrt(vy / 2)
    return np.array([0.0, 0.0, sx, sx, sy, sy])


def simulate_classical(params: PhysicalParams, cfg: TrajectoryConfig) -> Trajectory:
    """Integrate one seeded trajectory; identical inputs give identical output."""
    cfg.validate(params)
    m = classical_drift(params)
    lam, v = np.linalg.eig(m)
    if lam.real.max() >= 0:
        k = int(np.argmax(lam.real))
        raise UnstableSystemError(complex(lam[k]))
    vinv = np.linalg.inv(v)
    sigma = noise_std(params)
    if sigma.any() and max(params.n_th_x, params.n_th_y) < 100:
        warnings.warn("classical integration with thermal occupation below 100 neglects "
                      "vacuum noise that is no longer small", ClassicalValidityWarning, stacklevel=2)
    mu = np.exp(lam * cfg.dt)
    half = np.exp(lam * cfg.dt / 2)
    # mode-space noise loading: y += half * (vinv @ (sigma * sqrt(dt) * xi))
    load = (vinv * (sigma * math.sqrt(cfg.dt))[None, :]) * half[:, None]
    active = np.flatnonzero(sigma)

    r0 = np.zeros(6)
    if cfg.initial is not None:
        z0 = np.asarray(cfg.initial, dtype=complex)
        r0[0::2], r0[1::2] = z0.real, z0.imag
    state = (vinv @ r0).astype(complex)

    rng = np.random.default_rng(cfg.seed)
    scale = math.sqrt(max(sigma.max() ** 2 / slowest_energy_decay(params), r0 @ r0, 1.0))
    bound = 1e6 * scale

    total = cfg.burn_in + cfg.n_steps
    keep = []
    done = 0
    while done < total:
        n = min(CHUNK, total - done)
        if active.size:
            xi = rng.standard_normal((n, active.size))
            drive = xi @ load[:, active].T
        else:
            drive = np.zeros((n, 6), dtype=complex)
        ys = np.empty((n, 6), dtype=complex)
        for k in range(6):
            ys[:, k], _ = lfilter([1.0], [1.0, -mu[k]], drive[:, k], zi=[mu[k] * state[k]])
        state = ys[-1].copy()
        start = max(cfg.burn_in - done, 0)
        # global step index of each row is done + row + 1; keep rows after burn-in on the stride
        first = start + (-(done + start + 1 - cfg.burn_in)) % cfg.decimate
        if first < n:
            r = (ys[first::cfg.decimate] @ v.T).real
            if not np.all(np.isfinite(r)) or np.abs(r).max() > bound:
                raise UnstableSystemError(complex(lam[int(np.argmax(lam.real))]))
            keep.append(r)
        done += n

    r = np.concatenate(keep) if keep else np.zeros((0, 6))
    z = r[:, 0::2] + 1j * r[:, 1::2]
    t = (np.arange(r.shape[0]) * cfg.decimate + cfg.decimate) * cfg.dt
    return Trajectory(t=t, a=z[:, 0], b_x=z[:, 1], b_y=z[:, 2])


def psd(series, segment_length: int, sample_dt: float, *, kind="S_bb", params=None) -> Spectrum:
    """Two-sided Welch periodogram (Hann window, 50% overlap).

    The frequency axis uses the ``exp(-i Omega t)`` convention of the
    mechanical spectra, so a series ``exp(-i Omega_0 t)`` peaks at
    ``+Omega_0``. Normalized so that ``int PSD dOmega / 2 pi`` equals the
    mean of ``|series|**2``.
    """
    x = np.asarray(series)
    if segment_length > x.size:
        raise ValueError("segment_length exceeds the series length")
    f, p = welch(x, fs=1.0 / sample_dt, window="hann", nperseg=segment_length,
                 return_onesided=False, detrend=False, scaling="density")
    omega = -TWO_PI * f
    order = np.argsort(omega)
    omega, p = omega[order], p[order].real
    grid = FrequencyGrid(float(omega[0]), float(omega[-1]), omega.size)
    return Spectrum(grid, p, kind, params, None, {"segments": x.size // (segment_length // 2) - 1})
