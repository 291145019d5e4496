"""Drift matrix of the linearized Langevin equations and its eigenstructure.

Basis order everywhere is ``(a, a^dag, b_X, b_X^dag, b_Y, b_Y^dag)``.
The stationary equations read ``(-i*Omega*I + D) V = V_in``, so an
eigenvalue ``lam`` of ``D`` is a resonance at ``Omega = -i*lam``: the
imaginary part is the (signed) eigenfrequency and the real part is the
half-linewidth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import PhysicalParams, decoherence_budget

PHOTON, PHONON_X, PHONON_Y = 0, 1, 2
LABELS = ("photon-like", "phonon-like", "dark")


class UnstableSystemError(ValueError):
    """Raised when the drift matrix has an eigenvalue with Re <= 0."""

    def __init__(self, eigenvalue, message=None):
        self.eigenvalue = complex(eigenvalue)
        if message is None:
            message = ("system is unstable: drift eigenvalue "
                       f"{self.eigenvalue.real:.6g}{self.eigenvalue.imag:+.6g}j rad/s "
                       "has non-positive real part")
        super().__init__(message)


class EigenSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class DriftMatrix:
    entries: np.ndarray
    params: PhysicalParams | None = None

    def system_matrix(self, omega):
        """``-i*omega*I + D`` for scalar or array ``omega`` (shape ``(..., 6, 6)``)."""
        omega = np.asarray(omega, dtype=float)
        eye = np.eye(6)
        return -1j * omega[..., None, None] * eye + self.entries

    @property
    def trace(self):
        return np.trace(self.entries)


def build_drift_matrix(params: PhysicalParams) -> DriftMatrix:
    p = params
    gx, gy = p.g_x, p.g_y
    d = np.zeros((6, 6), dtype=complex)
    d[0, 0] = -1j * p.delta + p.kappa / 2
    d[1, 1] = 1j * p.delta + p.kappa / 2
    d[2, 2] = 1j * p.omega_x0 + p.gamma_mx / 2
    d[3, 3] = -1j * p.omega_x0 + p.gamma_mx / 2
    d[4, 4] = 1j * p.omega_y0 + p.gamma_my / 2
    d[5, 5] = -1j * p.omega_y0 + p.gamma_my / 2
    # cavity rows couple to b + b^dag of each mode
    d[0, 2:6] = [-1j * gx, -1j * gx, -1j * gy, -1j * gy]
    d[1, 2:6] = [1j * gx, 1j * gx, 1j * gy, 1j * gy]
    # mechanical rows couple to a + a^dag
    d[2, 0:2] = -1j * gx
    d[3, 0:2] = 1j * gx
    d[4, 0:2] = -1j * gy
    d[5, 0:2] = 1j * gy
    return DriftMatrix(d, params)


def _as_matrix(d):
    return d.entries if isinstance(d, DriftMatrix) else np.asarray(d, dtype=complex)


def stability_check(d) -> bool:
    """True iff every eigenvalue of the drift matrix has a positive real part."""
    lam = np.linalg.eigvals(_as_matrix(d))
    return bool(np.min(lam.real) > 0)


def require_stable(d):
    lam = np.linalg.eigvals(_as_matrix(d))
    worst = lam[np.argmin(lam.real)]
    if not worst.real > 0:
        raise UnstableSystemError(worst)


def _composition(vec):
    w = np.abs(vec) ** 2
    w = np.array([w[0] + w[1], w[2] + w[3], w[4] + w[5]])
    return w / w.sum()


@dataclass(frozen=True)
class EigenSolution:
    """Eigenpairs of the drift matrix grouped into conjugate pairs.

    ``frequencies``, ``half_widths``, ``compositions``, ``labels`` and
    ``vectors`` have one entry per conjugate pair, sorted by descending
    frequency. ``compositions[k]`` is (photonic, X-phononic, Y-phononic).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    pairs: np.ndarray  # (3, 2) indices: (member with Im >= 0, conjugate partner)
    frequencies: np.ndarray
    half_widths: np.ndarray
    compositions: np.ndarray
    vectors: np.ndarray  # (3, 6) normalized eigenvectors of the Im >= 0 members
    labels: tuple = field(default_factory=tuple)

    def index(self, label):
        return self.labels.index(label)

    def phononic_fraction(self, k):
        return 1.0 - self.compositions[k, PHOTON]


def _label_pairs(comp):
    photon = int(np.argmax(comp[:, PHOTON]))
    rest = [k for k in range(3) if k != photon]
    # ties between the mechanical-like branches go to the smaller photonic weight
    dark = min(rest, key=lambda k: (comp[k, PHOTON], k))
    labels = [""] * 3
    labels[photon] = LABELS[0]
    labels[dark] = LABELS[2]
    labels[[k for k in rest if k != dark][0]] = LABELS[1]
    return tuple(labels)


def eigensolve(d) -> EigenSolution:
    m = _as_matrix(d)
    if not np.all(np.isfinite(m)):
        raise EigenSolveError("drift matrix has non-finite entries")
    try:
        lam, vecs = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise EigenSolveError(f"eigensolver did not converge: {exc}") from exc

    reps = np.argsort(-lam.imag, kind="stable")[:3]
    others = np.setdiff1d(np.arange(6), reps)
    cost = np.abs(lam[others][None, :] - np.conj(lam[reps])[:, None])
    _, cols = linear_sum_assignment(cost)
    pairs = np.column_stack([reps, others[cols]])

    order = np.argsort(-lam[pairs[:, 0]].imag, kind="stable")
    pairs = pairs[order]
    rep_vecs = vecs[:, pairs[:, 0]].T
    rep_vecs = rep_vecs / np.linalg.norm(rep_vecs, axis=1, keepdims=True)
    comp = np.array([_composition(v) for v in rep_vecs])
    rep_lam = lam[pairs[:, 0]]
    return EigenSolution(
        eigenvalues=lam, eigenvectors=vecs, pairs=pairs,
        frequencies=rep_lam.imag, half_widths=rep_lam.real,
        compositions=comp, vectors=rep_vecs, labels=_label_pairs(comp))


@dataclass(frozen=True)
class DispersionCurve:
    """Three tracked branches over a detuning sweep.

    Arrays are indexed ``[point, branch]``; branch identity is kept by
    maximal eigenvector overlap between neighbouring points.
    """

    detunings: np.ndarray
    frequencies: np.ndarray
    half_widths: np.ndarray
    compositions: np.ndarray  # (n, 3, 3)
    overlaps: np.ndarray  # overlap with the previous point, 1 at the first point
    ambiguous: np.ndarray  # bool per point
    labels: list  # per point, label of each tracked branch
    bare_frequencies: tuple = ()  # (omega_x0, omega_y0) of the swept parameter set

    @property
    def photonic_fractions(self):
        return self.compositions[:, :, PHOTON]

    def sorted_levels(self):
        """Frequencies sorted ascending per point, with matching compositions."""
        idx = np.argsort(self.frequencies, axis=1)
        f = np.take_along_axis(self.frequencies, idx, axis=1)
        w = np.take_along_axis(self.half_widths, idx, axis=1)
        c = np.take_along_axis(self.compositions, idx[:, :, None], axis=1)
        return f, w, c, idx


def dispersion(sweep, detunings=None, *, min_overlap=0.5) -> DispersionCurve:
    """Eigenfrequency branches over a detuning sweep.

    ``sweep`` is either a list of :class:`PhysicalParams` (sorted by
    ``delta``) or a single parameter set combined with ``detunings``
    (rad/s).
    """
    if detunings is not None:
        sweep = [sweep.replace(delta=float(dl)) for dl in detunings]
    sweep = list(sweep)
    if not sweep:
        raise ValueError("empty sweep")
    deltas = np.array([p.delta for p in sweep])
    if np.any(np.diff(deltas) < 0) and np.any(np.diff(deltas) > 0):
        raise ValueError("sweep must be sorted by detuning")

    sols = [eigensolve(build_drift_matrix(p)) for p in sweep]
    n = len(sols)
    freqs = np.empty((n, 3))
    widths = np.empty((n, 3))
    comps = np.empty((n, 3, 3))
    overlaps = np.ones((n, 3))
    ambiguous = np.zeros(n, dtype=bool)
    labels = []

    perm = np.arange(3)
    prev = sols[0].vectors
    for i, sol in enumerate(sols):
        if i > 0:
            ov = np.abs(np.conj(prev) @ sol.vectors.T)
            rows, cols = linear_sum_assignment(-ov)
            perm = cols[np.argsort(rows)]
            overlaps[i] = ov[np.arange(3), perm]
            ambiguous[i] = bool(np.any(overlaps[i] <= min_overlap))
        freqs[i] = sol.frequencies[perm]
        widths[i] = sol.half_widths[perm]
        comps[i] = sol.compositions[perm]
        labels.append([sol.labels[k] for k in perm])
        prev = sol.vectors[perm]
    bare = (sweep[0].omega_x0, sweep[0].omega_y0)
    return DispersionCurve(deltas, freqs, widths, comps, overlaps, ambiguous, labels, bare)


@dataclass(frozen=True)
class AvoidedCrossing:
    detuning: float
    gap: float
    mode: str  # mechanical axis whose bare line is avoided


def avoided_crossings(curve: DispersionCurve, *, foreign_threshold=0.5):
    """Avoided crossings between the cavity branch and each mechanical line.

    The bare cavity line ``-delta`` meets the bare mechanical line
    ``omega_j0`` at ``delta = -omega_j0``. That crossing counts as
    avoided when no branch that is mostly *not* mode j (weight on mode j
    below ``foreign_threshold``) passes through ``omega_j0`` anywhere in
    the sweep. ``gap`` is the separation of the nearest branches above and
    below ``omega_j0`` at the sweep point closest to the bare crossing.
    """
    found = []
    dets = curve.detunings
    f = curve.frequencies
    for k, (axis, omega0) in enumerate(zip("xy", curve.bare_frequencies)):
        own = curve.compositions[:, :, 1 + k]
        bare = -dets - omega0
        if not (bare.min() < 0 < bare.max()):
            continue
        side = np.sign(f - omega0)
        flips = (side[1:] != side[:-1]) & (side[1:] != 0)
        foreign = np.minimum(own[1:], own[:-1]) < foreign_threshold
        if np.any(flips & foreign):
            continue
        i = int(np.argmin(np.abs(bare)))
        above = f[i][f[i] > omega0]
        below = f[i][f[i] < omega0]
        if above.size == 0 or below.size == 0:
            continue
        found.append(AvoidedCrossing(float(-omega0), float(above.min() - below.max()), axis))
    return sorted(found, key=lambda x: x.detuning)


def weak_coupling_approx(params: PhysicalParams, mode: str = "x"):
    """Optical-spring frequency and optically modified damping of one mode.

    Returns ``(omega_eff, gamma_eff)``; ``gamma_eff`` is an energy damping
    rate, i.e. twice the corresponding eigenvalue real part.
    """
    omega0, gamma_m, g, _, _ = params.mode(mode)
    delta, kappa = params.delta, params.kappa
    minus = delta - omega0
    plus = delta + omega0
    q = kappa * kappa / 4
    omega_eff = omega0 + g * g * (minus / (minus * minus + q) + plus / (plus * plus + q))
    gamma_eff = gamma_m + g * g * (kappa / (plus * plus + q) - kappa / (minus * minus + q))
    return omega_eff, gamma_eff


def bright_dark_decompose(params: PhysicalParams):
    """Weights on (b_X, b_Y) of the bright and dark mechanical modes.

    The bright mode follows the couplings; the dark mode is the
    orthogonal combination, so the two vectors form an orthonormal pair.
    """
    gx, gy = params.g_x, params.g_y
    norm = np.hypot(gx, gy)
    if norm == 0:
        raise ValueError("bright/dark modes are undefined when both couplings vanish")
    bright = np.array([gx, gy]) / norm
    dark = np.array([gy, -gx]) / norm
    return bright, dark


@dataclass(frozen=True)
class ThresholdReport:
    single_mode_x: bool
    single_mode_y: bool
    two_mode: bool
    coherent_x: bool
    coherent_y: bool
    two_mode_product: float
    two_mode_bound: float


def strong_coupling_thresholds(params: PhysicalParams, env=None) -> ThresholdReport:
    p = params
    single = {axis: (4 * g >= p.kappa and 4 * g >= gm)
              for axis, g, gm in (("x", p.g_x, p.gamma_mx), ("y", p.g_y, p.gamma_my))}
    product = p.g_x * p.g_y
    bound = p.kappa ** 2 / 32
    return ThresholdReport(
        single_mode_x=single["x"], single_mode_y=single["y"],
        two_mode=bool(product > bound),
        coherent_x=decoherence_budget(p, env, "x").coherent,
        coherent_y=decoherence_budget(p, env, "y").coherent,
        two_mode_product=product, two_mode_bound=bound)


def minimum_splitting(params: PhysicalParams, axis: str = "x", span=None, n_points=801):
    """Smallest frequency gap between the two branches that share the
    cavity and the ``axis`` mode, over detunings ``-omega0 +- span``.

    Returns ``(gap, detuning)`` in rad/s. ``span`` defaults to ``2 kappa``.
    """
    k = 1 if axis == "x" else 2
    omega0 = params.mode(axis)[0]
    span = 2 * params.kappa if span is None else span
    best = (math.inf, math.nan)
    for dl in np.linspace(-omega0 - span, -omega0 + span, n_points):
        sol = eigensolve(build_drift_matrix(params.replace(delta=float(dl))))
        weight = sol.compositions[:, PHOTON] + sol.compositions[:, k]
        pair = np.argsort(weight)[-2:]
        gap = abs(sol.frequencies[pair[0]] - sol.frequencies[pair[1]])
        if gap < best[0]:
            best = (float(gap), float(dl))
    return best
