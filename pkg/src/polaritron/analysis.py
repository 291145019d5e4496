"""Lorentzian fitting, dispersion-point extraction and the pressure law."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, linear_sum_assignment
from scipy.signal import find_peaks, peak_widths
from scipy.stats import linregress

from .constants import TWO_PI
from .spectra import FrequencyGrid, Spectrum, heterodyne_spectrum


class SeedingError(ValueError):
    pass


class DegenerateFitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LorentzianFit:
    """``offset + sum_k (area_k / pi) * w_k / ((omega - c_k)**2 + w_k**2)``.

    Centres and half-widths are in rad/s, sorted by centre; areas are in
    spectrum units times rad/s.
    """

    centers: np.ndarray
    half_widths: np.ndarray
    areas: np.ndarray
    offset: float
    residual_rms: float
    converged: bool
    overlapping: bool = False
    nfev: int = 0

    @property
    def n_peaks(self):
        return len(self.centers)

    def evaluate(self, omega):
        return lorentzian_sum(np.asarray(omega, dtype=float), self.centers, self.half_widths,
                              self.areas, self.offset)

    def to_spectrum(self, grid: FrequencyGrid, kind="heterodyne"):
        return Spectrum(grid, self.evaluate(grid.omega), kind)


def lorentzian_sum(omega, centers, half_widths, areas, offset=0.0):
    out = np.full(np.shape(omega), float(offset))
    for c, w, a in zip(centers, half_widths, areas):
        out += (a / np.pi) * w / ((omega - c) ** 2 + w ** 2)
    return out


def _moving_average(y, n=5):
    """Centered ``n``-point mean; the ``n // 2`` samples at each edge are left raw."""
    y = np.asarray(y, dtype=float)
    out = y.copy()
    h = n // 2
    if y.size > n:
        out[h:-h] = np.convolve(y, np.ones(n) / n, mode="valid")
    return out


def _seed(x, y, n_peaks, init):
    smooth = _moving_average(y)
    offset = float(np.percentile(y, 10))
    dx = x[1] - x[0]
    if init is None:
        idx, props = find_peaks(smooth, prominence=0)
        if idx.size < n_peaks:
            raise SeedingError(f"found {idx.size} local maxima, need {n_peaks}")
        order = np.argsort(props["prominences"])[::-1][:n_peaks]
        idx = np.sort(idx[order])
    else:
        if len(init) != n_peaks:
            raise SeedingError(f"{len(init)} seeds given for {n_peaks} peaks")
        idx = np.array([int(np.argmin(np.abs(x - c))) for c in init])
    with warnings.catch_warnings():
        # seeds supplied by the caller need not sit on a local maximum
        warnings.simplefilter("ignore", RuntimeWarning)
        widths = peak_widths(smooth, idx, rel_height=0.5)[0]
    widths = np.where(widths > 0, widths, x.size / 20)
    hw = np.maximum(0.5 * widths * dx, dx)
    heights = np.maximum(smooth[idx] - offset, 1e-12 * max(1.0, abs(offset)))
    centers = x[idx] if init is None else np.asarray(init, dtype=float)
    return centers, hw, np.pi * hw * heights, offset


def fit_lorentzians(spec: Spectrum, n_peaks: int, init=None, *, max_iter=200,
                    xtol=1e-8) -> LorentzianFit:
    """Least-squares fit of ``n_peaks`` Lorentzians plus a free offset.

    Seeds default to the ``n_peaks`` most prominent maxima of a 5-point
    moving average of the data; ``init`` may instead give seed centres
    (rad/s). Widths and areas are fitted on a log scale, which keeps them
    positive. Raises ``SeedingError`` when too few maxima are found.
    """
    if n_peaks not in (1, 2, 3):
        raise ValueError("n_peaks must be 1, 2 or 3")
    y = np.asarray(spec.values)
    if np.iscomplexobj(y):
        if np.abs(y.imag).max() > 1e-12 * max(1.0, np.abs(y.real).max()):
            raise ValueError("fit_lorentzians needs a real spectrum")
        y = y.real
    x = spec.omega
    mid = 0.5 * (x[0] + x[-1])
    scale = 0.5 * (x[-1] - x[0])
    u = (x - mid) / scale

    c0, w0, a0, off0 = _seed(x, y, n_peaks, init)
    p0 = np.concatenate([[off0], (c0 - mid) / scale, np.log(w0 / scale), np.log(a0 / scale)])
    n = n_peaks

    def unpack(p):
        return p[0], p[1:1 + n], np.exp(p[1 + n:1 + 2 * n]), np.exp(p[1 + 2 * n:])

    def resid(p):
        off, c, w, a = unpack(p)
        return lorentzian_sum(u, c, w, a, off) - y

    def jac(p):
        _, c, w, a = unpack(p)
        j = np.empty((u.size, 1 + 3 * n))
        j[:, 0] = 1.0
        for k in range(n):
            d = u - c[k]
            den = d * d + w[k] ** 2
            shape = w[k] / den / np.pi
            j[:, 1 + k] = a[k] / np.pi * 2 * w[k] * d / den ** 2
            j[:, 1 + n + k] = a[k] / np.pi * (den - 2 * w[k] ** 2) / den ** 2 * w[k]
            j[:, 1 + 2 * n + k] = a[k] * shape
        return j

    sol = least_squares(resid, p0, jac=jac, method="lm", xtol=xtol, ftol=1e-12, gtol=1e-12,
                        max_nfev=max_iter)
    off, c, w, a = unpack(sol.x)
    order = np.argsort(c)
    centers = mid + scale * c[order]
    half_widths = scale * w[order]
    areas = scale * a[order]
    overlapping = bool(np.any(np.diff(centers) < half_widths[1:] + half_widths[:-1]))
    if overlapping:
        warnings.warn("fitted peaks overlap (separation below the sum of half-widths)",
                      DegenerateFitWarning, stacklevel=2)
    return LorentzianFit(
        centers=centers, half_widths=half_widths, areas=areas, offset=float(off),
        residual_rms=float(np.sqrt(np.mean(sol.fun ** 2))),
        converged=bool(sol.status > 0 and np.all(np.isfinite(sol.x))),
        overlapping=overlapping, nfev=int(sol.nfev))


@dataclass
class DispersionPoints:
    """Fitted peak centres per detuning, columns matched to eigenvalue branches.

    ``centers`` and ``half_widths`` are ``(n_detunings, 3)`` in rad/s, with
    NaN where no fitted peak was assigned to a branch. ``excluded`` lists
    ``(detuning, reason)`` for spectra whose fit failed.
    """

    detunings: np.ndarray
    centers: np.ndarray
    half_widths: np.ndarray
    branch_frequencies: np.ndarray
    branch_half_widths: np.ndarray
    excluded: list = field(default_factory=list)

    def rows(self):
        return [(d, tuple(c)) for d, c in zip(self.detunings, self.centers)]


def model_sweep_spectra(params, detunings, *, span=(20e3, 400e3), step=100.0):
    """High-frequency heterodyne sideband for each detuning (rad/s).

    ``span`` and ``step`` are ordinary-frequency offsets from the local
    oscillator in Hz.
    """
    grid = FrequencyGrid.from_khz(span[0] / 1e3, span[1] / 1e3, step / 1e3)
    return [(float(d), heterodyne_spectrum(params.replace(delta=float(d)), grid)) for d in detunings]


def fit_lorentzians_stagewise(spec: Spectrum, n_peaks: int) -> LorentzianFit:
    """Fit ``n_peaks`` Lorentzians when some peaks are only shoulders.

    Starts from the maxima that are visible, then repeatedly seeds an
    extra peak at the largest maximum of the fit residual and refits all
    peaks together.
    """
    x = spec.omega
    idx = find_peaks(_moving_average(np.asarray(spec.values).real), prominence=0)[0]
    k = int(min(max(idx.size, 1), n_peaks))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateFitWarning)
        fit = fit_lorentzians(spec, k)
        while fit.n_peaks < n_peaks:
            excess = np.asarray(spec.values).real - fit.evaluate(x)
            seed = float(x[int(np.argmax(_moving_average(excess)))])
            fit = fit_lorentzians(spec, fit.n_peaks + 1, init=sorted([*fit.centers, seed]))
    if fit.overlapping:
        warnings.warn("fitted peaks overlap (separation below the sum of half-widths)",
                      DegenerateFitWarning, stacklevel=2)
    return fit


def _fit_one(args):
    spec, n_peaks = args
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateFitWarning)
            return fit_lorentzians_stagewise(spec, n_peaks), None
    except (SeedingError, ValueError, np.linalg.LinAlgError) as exc:
        return None, str(exc)


def extract_dispersion_points(sweep, n_peaks=3, *, jobs=1) -> DispersionPoints:
    """Fit every ``(detuning, Spectrum)`` in ``sweep`` and match the centres
    to the eigenfrequency branches at that detuning.

    Matching is a minimum-cost assignment on frequency distance, so no two
    branches ever receive the same fitted centre.
    """
    from .langevin import build_drift_matrix, eigensolve

    sweep = list(sweep)
    tasks = [(spec, n_peaks) for _, spec in sweep]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_fit_one, tasks))
    else:
        results = [_fit_one(t) for t in tasks]

    dets, centers, widths, bf, bw, excluded = [], [], [], [], [], []
    for (det, spec), (fit, err) in zip(sweep, results):
        if fit is None or not fit.converged:
            excluded.append((det, err or "fit did not converge"))
            continue
        sol = eigensolve(build_drift_matrix(spec.params.replace(delta=det)))
        cost = np.abs(fit.centers[:, None] - sol.frequencies[None, :])
        rows, cols = linear_sum_assignment(cost)
        c = np.full(3, np.nan)
        w = np.full(3, np.nan)
        c[cols] = fit.centers[rows]
        w[cols] = fit.half_widths[rows]
        dets.append(det)
        centers.append(c)
        widths.append(w)
        bf.append(sol.frequencies)
        bw.append(sol.half_widths)
    shape = (len(dets), 3)
    return DispersionPoints(
        detunings=np.asarray(dets), centers=np.asarray(centers).reshape(shape),
        half_widths=np.asarray(widths).reshape(shape), branch_frequencies=np.asarray(bf).reshape(shape),
        branch_half_widths=np.asarray(bw).reshape(shape), excluded=excluded)


@dataclass(frozen=True)
class PressureFit:
    """Straight line ``area = slope * P + intercept``.

    ``damping_slope`` (Hz/Pa) is present only when an area-per-damping
    calibration was supplied.
    """

    slope: float
    intercept: float
    fit_range: tuple
    residuals: np.ndarray
    damping_slope: float | None = None


def fit_pressure_law(points, *, calibration=None) -> PressureFit:
    """Ordinary least squares of peak area against pressure.

    ``calibration`` is the change of area per unit gas damping rate
    ``Gamma_m`` (area / (rad/s)), as returned by :func:`damping_calibration`.
    With ``Gamma_m = 2 pi * slope_Hz_per_Pa * P`` the damping slope is
    ``(d area / dP) / (2 pi * calibration)``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("fit_pressure_law needs at least 3 (pressure, area) points")
    p, area = pts[:, 0], pts[:, 1]
    if np.ptp(p) == 0:
        raise ValueError("pressures must not all be equal")
    res = linregress(p, area)
    resid = area - (res.slope * p + res.intercept)
    damping = None
    if calibration is not None:
        damping = res.slope / (TWO_PI * calibration)
    return PressureFit(slope=float(res.slope), intercept=float(res.intercept),
                       fit_range=(float(p.min()), float(p.max())), residuals=resid,
                       damping_slope=damping)


def peak_area(params, center, half_window, *, step=None):
    """Area of the shot-noise-subtracted heterodyne spectrum over
    ``center +- half_window`` (offsets from the local oscillator, rad/s)."""
    step = step or half_window / 500
    n = 2 * int(math.ceil(half_window / step)) + 1
    grid = FrequencyGrid(center - half_window, center + half_window, n)
    spec = heterodyne_spectrum(params, grid)
    return float(np.trapezoid(spec.values - 1.0, dx=grid.spacing))


def area_calibration(params, center, half_window, *, axis="x", delta_rate=None, step=None):
    """Change of ``peak_area`` per unit added decoherence rate (rad/s) on ``axis``.

    The spectrum is linear in the noise weights, so a single finite
    difference in the extra heating rate is exact up to rounding.
    """
    name = "gamma_nx" if axis == "x" else "gamma_ny"
    base = getattr(params, name)
    delta_rate = delta_rate or max(base, TWO_PI * 1e3)
    hi = peak_area(params.replace(**{name: base + delta_rate}), center, half_window, step=step)
    lo = peak_area(params, center, half_window, step=step)
    return (hi - lo) / delta_rate


def damping_calibration(params, center, half_window, *, delta_rate=None, step=None):
    """Change of ``peak_area`` per unit gas damping rate (rad/s).

    Gas collisions damp and heat both axes at the same rate ``Gamma_m``,
    each towards its own bath occupation, so the peak area of one mode
    also picks up the tail of the other. The derivative is taken by
    raising ``gamma_mx`` and ``gamma_my`` together; it is exact as long as
    ``Gamma_m`` stays negligible next to the optical damping.
    """
    delta_rate = delta_rate or max(params.gamma_mx, TWO_PI * 1.0)
    hi = peak_area(params.replace(gamma_mx=params.gamma_mx + delta_rate,
                                  gamma_my=params.gamma_my + delta_rate),
                   center, half_window, step=step)
    lo = peak_area(params, center, half_window, step=step)
    return (hi - lo) / delta_rate
