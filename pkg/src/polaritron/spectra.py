"""Stationary spectra of the output field and of the particle motion.

Conventions
-----------
``S_ij(Omega)`` is the correlation of element i of the output vector at
``-Omega`` with element j at ``+Omega``. With this choice ``S_bb`` peaks
at ``+Omega_m`` and integrates to the phonon number, while
``S_bdag_bdag`` peaks at ``-Omega_m`` and integrates to ``n + 1``; the
grids used for integrals must therefore cover both signs of frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import TWO_PI
from .langevin import build_drift_matrix, require_stable
from .model import PhysicalParams

KINDS = ("heterodyne", "S_aa", "S_adag_adag", "S_bb", "S_bdag_bdag", "S_xy_cross", "S_ij")

# (i, j) in 1-based output-vector indices
S_AA = (2, 1)
S_ADAG_ADAG = (1, 2)
S_BB = (4, 3)
S_BDAG_BDAG = (3, 4)
S_XY = (6, 3)


class SingularSystemError(ValueError):
    pass


class GridTooNarrowError(ValueError):
    pass


class IsotropicError(ValueError):
    pass


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid of angular frequencies (rad/s), endpoints included."""

    start: float
    stop: float
    n_points: int

    def __post_init__(self):
        if not self.start < self.stop:
            raise ValueError("grid start must be < stop")
        if self.n_points < 2:
            raise ValueError("grid needs at least 2 points")

    @classmethod
    def from_khz(cls, start, stop, step):
        n = int(round((stop - start) / step)) + 1
        return cls(TWO_PI * 1e3 * start, TWO_PI * 1e3 * stop, n)

    @classmethod
    def symmetric_khz(cls, half_span, step):
        return cls.from_khz(-half_span, half_span, step)

    @property
    def omega(self):
        return np.linspace(self.start, self.stop, self.n_points)

    @property
    def freq_khz(self):
        return self.omega / (TWO_PI * 1e3)

    @property
    def spacing(self):
        return (self.stop - self.start) / (self.n_points - 1)

    @property
    def is_symmetric(self):
        return math.isclose(self.start, -self.stop, rel_tol=1e-12, abs_tol=0.0)

    def refined(self, span_factor=2.0, step_factor=0.5):
        """Grid with range scaled by ``span_factor`` about its centre and step scaled by ``step_factor``."""
        centre = 0.5 * (self.start + self.stop)
        half = 0.5 * (self.stop - self.start) * span_factor
        step = self.spacing * step_factor
        n = int(round(2 * half / step)) + 1
        return FrequencyGrid(centre - half, centre + half, n)


def default_grid():
    """+-400 kHz at 10 Hz resolution."""
    return FrequencyGrid.symmetric_khz(400.0, 0.01)


@dataclass(frozen=True)
class Spectrum:
    grid: FrequencyGrid
    values: np.ndarray
    kind: str
    params: PhysicalParams | None = None
    theta: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if len(self.values) != self.grid.n_points:
            raise ValueError("values do not match the grid")

    @property
    def omega(self):
        return self.grid.omega

    @property
    def freq_khz(self):
        return self.grid.freq_khz

    def integral(self):
        """Trapezoidal integral over dOmega / 2pi."""
        return np.trapezoid(self.values, dx=self.grid.spacing) / TWO_PI

    def window(self, lo, hi):
        """Sub-spectrum with ``lo <= omega <= hi`` (rad/s)."""
        w = self.omega
        mask = (w >= lo) & (w <= hi)
        idx = np.flatnonzero(mask)
        if idx.size < 2:
            raise ValueError("window holds fewer than two grid points")
        grid = FrequencyGrid(w[idx[0]], w[idx[-1]], idx.size)
        return Spectrum(grid, self.values[idx], self.kind, self.params, self.theta, dict(self.meta))


@dataclass(frozen=True)
class NoiseWeights:
    """Coefficients of the non-vanishing input correlators (rad/s)."""

    cavity: float
    x_plus: float  # gamma_mx (n_x + 1) + gamma_nx
    x_minus: float  # gamma_mx n_x + gamma_nx
    y_plus: float
    y_minus: float

    @classmethod
    def from_params(cls, p: PhysicalParams, classical=False):
        """Quantum weights, or with ``classical`` the classical limit: no
        cavity input noise and ``n + 1`` replaced by ``n``."""
        if classical:
            wx = p.gamma_mx * p.n_th_x + p.gamma_nx
            wy = p.gamma_my * p.n_th_y + p.gamma_ny
            return cls(cavity=0.0, x_plus=wx, x_minus=wx, y_plus=wy, y_minus=wy)
        return cls(
            cavity=p.kappa,
            x_plus=p.gamma_mx * (p.n_th_x + 1) + p.gamma_nx,
            x_minus=p.gamma_mx * p.n_th_x + p.gamma_nx,
            y_plus=p.gamma_my * (p.n_th_y + 1) + p.gamma_ny,
            y_minus=p.gamma_my * p.n_th_y + p.gamma_ny,
        )

    def terms(self):
        """``(weight, k, l)`` with 0-based input indices: weight * O-[i,k] O+[j,l]."""
        return ((self.cavity, 0, 1), (self.x_plus, 2, 3), (self.x_minus, 3, 2),
                (self.y_plus, 4, 5), (self.y_minus, 5, 4))


def _frame(params, theta):
    c, s = math.cos(theta), math.sin(theta)
    r = np.zeros((6, 6))
    r[0, 0] = r[1, 1] = math.sqrt(params.kappa)
    r[2, 2] = r[3, 3] = r[4, 4] = r[5, 5] = c
    r[2, 4] = r[3, 5] = s
    r[4, 2] = r[5, 3] = -s
    sub = np.zeros((6, 6))
    sub[0, 0] = sub[1, 1] = 1 / math.sqrt(params.kappa)
    return r, sub


def _output_matrix(drift, params, theta, omega):
    r, sub = _frame(params, theta)
    try:
        inv = np.linalg.inv(drift.system_matrix(omega))
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("-i*Omega*I + D is singular on the grid") from exc
    return r @ inv - sub


def output_matrix(params: PhysicalParams, theta_frame: float, omega):
    """Input-output matrix ``O(omega)`` mapping the input noise vector to
    ``(a, a^dag, b_X', b_X'^dag, b_Y', b_Y'^dag)`` in the frame rotated by
    ``theta_frame``."""
    drift = build_drift_matrix(params)
    require_stable(drift)
    return _output_matrix(drift, params, theta_frame, omega)


def _spectra(params, theta, omega, pairs, classical=False):
    """Evaluate several S_ij on ``omega`` sharing one set of matrix inversions."""
    drift = build_drift_matrix(params)
    require_stable(drift)
    omega = np.asarray(omega, dtype=float)
    o_plus = _output_matrix(drift, params, theta, omega)
    if np.allclose(omega, -omega[::-1], rtol=0, atol=1e-9 * max(1.0, np.abs(omega).max())):
        o_minus = o_plus[::-1]
    else:
        o_minus = _output_matrix(drift, params, theta, -omega)
    weights = NoiseWeights.from_params(params, classical)
    out = []
    for i, j in pairs:
        if not (1 <= i <= 6 and 1 <= j <= 6):
            raise IndexError(f"spectrum indices must lie in 1..6, got ({i}, {j})")
        total = np.zeros(omega.shape, dtype=complex)
        for wgt, k, l in weights.terms():
            if wgt:
                total += wgt * o_minus[:, i - 1, k] * o_plus[:, j - 1, l]
        out.append(total)
    return out


_KIND_OF = {S_AA: "S_aa", S_ADAG_ADAG: "S_adag_adag", S_BB: "S_bb",
            S_BDAG_BDAG: "S_bdag_bdag", S_XY: "S_xy_cross"}


def spectrum_ij(params, theta_frame, grid: FrequencyGrid, i: int, j: int) -> Spectrum:
    """Generic output spectrum S_ij (1-based indices), complex valued."""
    (values,) = _spectra(params, theta_frame, grid.omega, [(i, j)])
    kind = _KIND_OF.get((i, j), "S_ij")
    return Spectrum(grid, values, kind, params, theta_frame, {"ij": (i, j)})


def heterodyne_spectrum(params: PhysicalParams, grid: FrequencyGrid) -> Spectrum:
    """Heterodyne photocurrent spectrum normalized to shot noise.

    ``grid`` holds the offset from the local oscillator, ``Omega - Omega_LO``;
    positive offsets form the high-frequency sideband. The image term is
    evaluated at ``offset + 2 * Omega_LO``.
    """
    x = grid.omega
    (s_aa,) = _spectra(params, 0.0, x, [S_AA])
    (s_image,) = _spectra(params, 0.0, x + 2 * params.omega_lo, [S_ADAG_ADAG])
    values = params.eta * (s_aa.real + s_image.real) + (1 - params.eta)
    return Spectrum(grid, values, "heterodyne", params, None, {"axis": "Omega - Omega_LO"})


def _check_tails(spec, threshold):
    v = np.abs(spec.values)
    peak = v.max()
    edge = max(v[0], v[-1])
    if peak > 0 and edge > threshold * peak:
        lo, hi = spec.grid.freq_khz[[0, -1]]
        raise GridTooNarrowError(
            f"{spec.kind} has not decayed at the grid edges: edge/peak = {edge / peak:.3g} "
            f"> {threshold:g} on [{lo:.4g}, {hi:.4g}] kHz; widen the grid")


def mechanical_spectrum(params, theta_frame, grid: FrequencyGrid | None = None,
                        tail_threshold=1e-3, classical=False):
    """``(S_bb, S_bdag_bdag)`` of the motion along the direction ``theta_frame``
    (measured from X towards Y).

    ``classical`` drops vacuum noise (see :meth:`NoiseWeights.from_params`),
    which is the quantity a classical stochastic simulation reproduces.
    """
    grid = grid or default_grid()
    s_bb, s_dd = _spectra(params, theta_frame, grid.omega, [S_BB, S_BDAG_BDAG], classical)
    bb = Spectrum(grid, s_bb.real, "S_bb", params, theta_frame)
    dd = Spectrum(grid, s_dd.real, "S_bdag_bdag", params, theta_frame)
    if tail_threshold is not None:
        _check_tails(bb, tail_threshold)
        _check_tails(dd, tail_threshold)
    return bb, dd


def occupation(params, theta_frame=0.0, grid: FrequencyGrid | None = None,
               tail_threshold=1e-3) -> float:
    bb, _ = mechanical_spectrum(params, theta_frame, grid, tail_threshold)
    return float(bb.integral())


def sum_rule_check(params, theta_frame=0.0, grid: FrequencyGrid | None = None,
                   tail_threshold=1e-3) -> float:
    """``int S_bdag_bdag - int S_bb - 1``; zero for exact bosonic commutators."""
    bb, dd = mechanical_spectrum(params, theta_frame, grid, tail_threshold)
    return float(dd.integral() - bb.integral() - 1.0)


@dataclass(frozen=True)
class ColdestDirection:
    theta: float  # rad, in (-pi/2, pi/2]
    occupation: float
    n_x: float
    n_y: float
    cross: complex  # int S_XY dOmega / 2pi

    def occupation_at(self, theta):
        c, s = np.cos(theta), np.sin(theta)
        return c * c * self.n_x + s * s * self.n_y + 2 * c * s * self.cross.real


def axis_moments(params, grid: FrequencyGrid | None = None, tail_threshold=1e-3):
    """Integrated X and Y occupations and the X-Y cross term in the unrotated frame."""
    grid = grid or default_grid()
    s_xx, s_yy, s_xy = _spectra(params, 0.0, grid.omega, [S_BB, (6, 5), S_XY])
    dx = grid.spacing
    specs = [Spectrum(grid, s.real, "S_bb", params, t) for s, t in ((s_xx, 0.0), (s_yy, math.pi / 2))]
    if tail_threshold is not None:
        for sp in specs:
            _check_tails(sp, tail_threshold)
    n_x, n_y = (float(sp.integral()) for sp in specs)
    cross = complex(np.trapezoid(s_xy, dx=dx) / TWO_PI)
    return n_x, n_y, cross


def coldest_angle(params, grid: FrequencyGrid | None = None, tail_threshold=1e-3,
                  rtol=1e-3) -> ColdestDirection:
    """Direction of minimum occupation in the plane of motion.

    Along ``theta`` the occupation is
    ``cos^2 n_X + sin^2 n_Y + 2 sin cos Re C`` with ``C = int S_XY``, so the
    stationary angles satisfy ``tan(2 theta) = 2 Re C / (n_X - n_Y)``. Of the
    two stationary directions the colder one is returned.

    Raises ``IsotropicError`` when both ``2 Re C`` and ``n_X - n_Y`` are
    below ``rtol * (n_X + n_Y)``, i.e. within quadrature accuracy of an
    isotropic state.
    """
    n_x, n_y, cross = axis_moments(params, grid, tail_threshold)
    num = 2 * cross.real
    den = n_x - n_y
    if abs(num) <= rtol * (n_x + n_y) and abs(den) <= rtol * (n_x + n_y):
        raise IsotropicError("occupation is the same along every direction")
    theta = 0.5 * math.atan(num / den) if den != 0 else math.pi / 4
    result = ColdestDirection(theta, 0.0, n_x, n_y, cross)
    other = theta + math.pi / 2
    if result.occupation_at(other) < result.occupation_at(theta):
        theta = other
    if theta > math.pi / 2:
        theta -= math.pi
    return ColdestDirection(theta, float(result.occupation_at(theta)), n_x, n_y, cross)


def cavity_filter(params, omega):
    """Inverse cavity Lorentzian ``1 + ((delta + omega) / (kappa/2))**2``."""
    return 1.0 + ((params.delta + np.asarray(omega)) / (params.kappa / 2)) ** 2


def classical_reference(params, omega_low, high_values):
    """Low-sideband spectrum expected for symmetric (classical) motion.

    ``omega_low`` are the (negative) offsets of the low sideband and
    ``high_values`` the measured high sideband at ``-omega_low``.
    """
    q = (params.kappa / 2) ** 2
    w = np.asarray(omega_low)
    return np.asarray(high_values) * (q + (params.delta - w) ** 2) / (q + (params.delta + w) ** 2)


@dataclass(frozen=True)
class AsymmetryResult:
    ratio: float  # area(high sideband) / area(low sideband), cavity filtering removed
    inferred_n: float
    high_area: float
    low_area: float
    unreliable: bool
    high_fit: object
    low_fit: object
    reference: Spectrum  # classical symmetric prediction of the low sideband vs |offset|
    low_sideband: Spectrum  # measured low sideband vs |offset|, shot noise removed


def _sideband(spec: Spectrum, sign, lo, hi):
    """Shot-noise-subtracted sideband vs |offset| on [lo, hi]."""
    x = spec.omega
    mask = (sign * x >= lo) & (sign * x <= hi)
    idx = np.flatnonzero(mask)
    if sign < 0:
        idx = idx[::-1]
    absx = np.abs(x[idx])
    grid = FrequencyGrid(absx[0], absx[-1], idx.size)
    return Spectrum(grid, spec.values[idx] - 1.0, "heterodyne", spec.params, None,
                    {"sideband": "high" if sign > 0 else "low"})


def _nearest_maximum(spec, target, min_prominence=0.1):
    """Position of the prominent local maximum closest to ``target``."""
    from scipy.signal import find_peaks

    idx, props = find_peaks(spec.values, prominence=0)
    if idx.size == 0:
        return target
    prom = props["prominences"]
    idx = idx[prom >= min_prominence * prom.max()]
    x = spec.omega[idx]
    return float(x[np.argmin(np.abs(x - target))])


def sideband_asymmetry(params, grid: FrequencyGrid | None = None, *, target=None,
                       window=None, n_peaks=1, width_factor=5.0) -> AsymmetryResult:
    """Motional-sideband thermometry on the model heterodyne spectrum.

    Both sidebands are freed from cavity filtering, the peak nearest to
    ``target`` (rad/s, positive) is fitted with Lorentzians in each
    sideband, and the filtered signal is integrated over
    ``width_factor`` fitted half-widths around the fitted centre. For a
    thermal mode the ratio is ``n / (n + 1)``.

    ``target`` defaults to the eigenfrequency of the mode labelled
    phonon-like by ``eigensolve``; ``window`` (|offset| range, rad/s) defaults to
    ``target * (0.5, 1.5)``.
    """
    from .analysis import fit_lorentzians
    from .langevin import eigensolve

    if target is None:
        sol = eigensolve(build_drift_matrix(params))
        target = float(sol.frequencies[sol.index("phonon-like")])

    if grid is None:
        half = 2.0 * target
        grid = FrequencyGrid(-half, half, 2 * int(round(half / (TWO_PI * 5.0))) + 1)
    if window is None:
        window = (0.5 * target, 1.5 * target)
    het = heterodyne_spectrum(params, grid)

    areas, fits = [], []
    for sign in (1, -1):
        side = _sideband(het, sign, *window)
        filtered = Spectrum(side.grid, side.values * cavity_filter(params, sign * side.omega),
                            "heterodyne", params)
        init = [_nearest_maximum(filtered, target)] if n_peaks == 1 else None
        fit = fit_lorentzians(filtered, n_peaks, init=init)
        k = int(np.argmin(np.abs(np.asarray(fit.centers) - target)))
        c, w = fit.centers[k], fit.half_widths[k]
        part = filtered.window(c - width_factor * w, c + width_factor * w)
        baseline = fit.offset
        areas.append(float(np.trapezoid(part.values - baseline, dx=part.grid.spacing)))
        fits.append(fit)

    high, low = areas
    ratio = high / low
    unreliable = any(f.overlapping or not f.converged for f in fits)
    low_side = _sideband(het, -1, *window)
    high_side = _sideband(het, 1, *window)
    high_on_low = np.interp(low_side.omega, high_side.omega, high_side.values)
    ref = Spectrum(low_side.grid, classical_reference(params, -low_side.omega, high_on_low),
                   "heterodyne", params, None, {"sideband": "low", "reference": "classical"})
    return AsymmetryResult(ratio=ratio, inferred_n=ratio / (1 - ratio), high_area=high,
                           low_area=low, unreliable=bool(unreliable), high_fit=fits[0],
                           low_fit=fits[1], reference=ref, low_sideband=low_side)


def boxcar(values, width):
    """Centered moving average over ``width`` samples, for display only."""
    width = int(width)
    if width <= 1:
        return np.asarray(values).copy()
    kernel = np.ones(width) / width
    return np.convolve(values, kernel, mode="same")
