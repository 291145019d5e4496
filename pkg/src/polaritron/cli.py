"""``polaritron`` command line: config loading, sweeps and CSV output.

Config files are INI-style with one section per group; a key is named by
its dotted path, e.g. ``model.kappa_khz``. Frequencies are ordinary
frequencies in kHz unless the key says otherwise.

Exit codes: 0 success, 2 bad config or usage, 3 unstable parameters,
4 file I/O, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    DegenerateFitWarning,
    SeedingError,
    fit_lorentzians,
    fit_lorentzians_stagewise,
)
from .constants import hz, khz, to_khz
from .langevin import (
    EigenSolveError,
    UnstableSystemError,
    avoided_crossings,
    build_drift_matrix,
    dispersion,
    require_stable,
    strong_coupling_thresholds,
)
from .model import (
    EnvironmentSpec,
    PhysicalParams,
    decoherence_budget,
    derive_couplings,
    gas_damping,
    thermal_occupation,
)
from .spectra import (
    FrequencyGrid,
    GridTooNarrowError,
    IsotropicError,
    SingularSystemError,
    Spectrum,
    coldest_angle,
    heterodyne_spectrum,
    mechanical_spectrum,
    sideband_asymmetry,
)

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4, 5

SUBCOMMANDS = ("spectrum", "dispersion", "occupation", "fit", "asymmetry", "budget", "oracle")


class ConfigError(ValueError):
    pass


FLOAT, INT, STR, FLOATS, BOOL = "float", "int", "str", "floats", "bool"

# dotted key -> (type, default); a default of None marks an optional key
SCHEMA = {
    "model.delta_khz": (FLOAT, -120.0),
    "model.kappa_khz": (FLOAT, 57.0),
    "model.omega_x_khz": (FLOAT, 132.0),
    "model.omega_y_khz": (FLOAT, 117.0),
    "model.g_x_khz": (FLOAT, None),
    "model.g_y_khz": (FLOAT, None),
    "model.gamma_m_hz": (FLOAT, None),
    "model.gamma_n_x_khz": (FLOAT, 0.0),
    "model.gamma_n_y_khz": (FLOAT, 0.0),
    "model.temperature_k": (FLOAT, 293.0),
    "model.eta": (FLOAT, 0.32),
    "model.lo_khz": (FLOAT, 1100.0),
    "environment.pressure_pa": (FLOAT, None),
    "environment.damping_slope_hz_per_pa": (FLOAT, 13.0),
    "environment.g_total_khz": (FLOAT, None),
    "environment.theta_pol_deg": (FLOAT, None),
    "sweep.parameter": (STR, "model.delta_khz"),
    "sweep.start": (FLOAT, -260.0),
    "sweep.stop": (FLOAT, -60.0),
    "sweep.step": (FLOAT, 1.0),
    "sweep.values": (FLOATS, None),
    "grid.start_khz": (FLOAT, -400.0),
    "grid.stop_khz": (FLOAT, 400.0),
    "grid.step_khz": (FLOAT, 0.01),
    "grid.tail_threshold": (FLOAT, 1e-3),
    "spectrum.theta_deg": (FLOAT, 0.0),
    "occupation.theta_step_deg": (FLOAT, 1.0),
    "fit.input": (STR, None),
    "fit.n_peaks": (INT, 3),
    "fit.start_khz": (FLOAT, 20.0),
    "fit.stop_khz": (FLOAT, 400.0),
    "fit.step_khz": (FLOAT, 0.1),
    "asymmetry.target_khz": (FLOAT, None),
    "asymmetry.n_peaks": (INT, 1),
    "asymmetry.window_start_khz": (FLOAT, None),
    "asymmetry.window_stop_khz": (FLOAT, None),
    "oracle.n_th": (FLOAT, 1e4),
    "oracle.duration_s": (FLOAT, 1.0),
    "oracle.resolution_hz": (FLOAT, 100.0),
    "oracle.sample_dt_s": (FLOAT, 4e-7),
    "oracle.seed": (INT, 0),
    "oracle.window_widths": (FLOAT, 10.0),
    "output.dir": (STR, "out"),
}

DEFAULT_G_KHZ = 9.0
DEFAULT_GAMMA_M_HZ = 0.1


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``values`` maps every schema key to its value
    (``None`` for unset optional keys)."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def with_overrides(self, **dotted):
        merged = dict(self.values)
        for k, v in dotted.items():
            merged[k.replace("__", ".")] = v
        return validate(merged)

    def to_params(self, delta_khz=None) -> PhysicalParams:
        v = self.values
        if v["environment.pressure_pa"] is not None:
            gamma_m = gas_damping(v["environment.pressure_pa"],
                                  v["environment.damping_slope_hz_per_pa"])
        else:
            gamma_m = hz(v["model.gamma_m_hz"] if v["model.gamma_m_hz"] is not None
                         else DEFAULT_GAMMA_M_HZ)
        if v["environment.g_total_khz"] is not None:
            g_x, g_y = derive_couplings(khz(v["environment.g_total_khz"]),
                                        math.radians(v["environment.theta_pol_deg"]))
        else:
            g_x = khz(v["model.g_x_khz"] if v["model.g_x_khz"] is not None else DEFAULT_G_KHZ)
            g_y = khz(v["model.g_y_khz"] if v["model.g_y_khz"] is not None else DEFAULT_G_KHZ)
        t = v["model.temperature_k"]
        wx, wy = khz(v["model.omega_x_khz"]), khz(v["model.omega_y_khz"])
        delta = v["model.delta_khz"] if delta_khz is None else delta_khz
        return PhysicalParams(
            delta=khz(delta), kappa=khz(v["model.kappa_khz"]), omega_x0=wx, omega_y0=wy,
            gamma_mx=gamma_m, gamma_my=gamma_m, g_x=g_x, g_y=g_y,
            n_th_x=thermal_occupation(wx, t), n_th_y=thermal_occupation(wy, t),
            gamma_nx=khz(v["model.gamma_n_x_khz"]), gamma_ny=khz(v["model.gamma_n_y_khz"]),
            eta=v["model.eta"], omega_lo=khz(v["model.lo_khz"]))

    def environment(self):
        v = self.values
        if v["environment.pressure_pa"] is None:
            return None
        kwargs = {}
        if v["environment.g_total_khz"] is not None:
            kwargs = {"g_total": khz(v["environment.g_total_khz"]),
                      "theta_pol": math.radians(v["environment.theta_pol_deg"])}
        return EnvironmentSpec(pressure=v["environment.pressure_pa"],
                               temperature=v["model.temperature_k"],
                               damping_slope=v["environment.damping_slope_hz_per_pa"], **kwargs)

    def grid(self) -> FrequencyGrid:
        v = self.values
        return FrequencyGrid.from_khz(v["grid.start_khz"], v["grid.stop_khz"], v["grid.step_khz"])

    def sweep_values(self):
        v = self.values
        if v["sweep.values"] is not None:
            return list(v["sweep.values"])
        n = int(round((v["sweep.stop"] - v["sweep.start"]) / v["sweep.step"]))
        return [v["sweep.start"] + k * v["sweep.step"] for k in range(n + 1)]

    def sweep_params(self):
        """``(sweep value, PhysicalParams)`` for every point of the sweep."""
        key = self.values["sweep.parameter"]
        return [(x, self.with_overrides(**{key: x}).to_params()) for x in self.sweep_values()]

    def dumps(self) -> str:
        """Resolved config text; loading it back gives an identical RunConfig."""
        sections = {}
        for key, value in self.values.items():
            if value is None:
                continue
            sec, name = key.split(".", 1)
            sections.setdefault(sec, []).append((name, _format_value(value)))
        out = io.StringIO()
        for sec, items in sections.items():
            out.write(f"[{sec}]\n")
            for name, text in items:
                out.write(f"{name} = {text}\n")
            out.write("\n")
        return out.getvalue()


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(repr(float(x)) for x in value)
    return str(value)


def _parse_value(key, kind, text):
    try:
        if kind == FLOAT:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError
            return value
        if kind == INT:
            return int(text)
        if kind == FLOATS:
            return [float(x) for x in text.replace(",", " ").split()]
        if kind == BOOL:
            return text.strip().lower() in ("1", "true", "yes", "on")
        return text.strip()
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind}") from None


def parse_config_text(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    raw = {}
    for sec in parser.sections():
        for name, text_value in parser.items(sec):
            key = f"{sec}.{name}"
            if key not in SCHEMA:
                raise ConfigError(f"{key}: unknown key")
            raw[key] = _parse_value(key, SCHEMA[key][0], text_value)
    return validate(raw)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config_text(text)


def validate(raw: dict) -> RunConfig:
    for key in raw:
        if key not in SCHEMA:
            raise ConfigError(f"{key}: unknown key")
    v = {key: raw.get(key, default) for key, (_, default) in SCHEMA.items()}

    def need(key, cond, what):
        if v[key] is not None and not cond(v[key]):
            raise ConfigError(f"{key}: must be {what}, got {v[key]!r}")

    positive = (lambda x: x > 0, "> 0")
    nonneg = (lambda x: x >= 0, ">= 0")
    for key in ("model.kappa_khz", "model.omega_x_khz", "model.omega_y_khz", "model.lo_khz",
                "grid.step_khz", "oracle.duration_s", "oracle.resolution_hz",
                "oracle.sample_dt_s", "oracle.window_widths", "occupation.theta_step_deg",
                "fit.step_khz"):
        need(key, *positive)
    for key in ("model.g_x_khz", "model.g_y_khz", "model.gamma_m_hz", "model.gamma_n_x_khz",
                "model.gamma_n_y_khz", "model.temperature_k", "environment.pressure_pa",
                "environment.damping_slope_hz_per_pa", "environment.g_total_khz",
                "grid.tail_threshold", "oracle.n_th"):
        need(key, *nonneg)
    need("model.eta", lambda x: 0 < x <= 1, "in (0, 1]")
    need("environment.theta_pol_deg", lambda x: 0 <= x <= 90, "in [0, 90]")
    need("fit.n_peaks", lambda x: x in (1, 2, 3), "1, 2 or 3")
    need("asymmetry.n_peaks", lambda x: x in (1, 2, 3), "1, 2 or 3")
    need("oracle.seed", lambda x: x >= 0, ">= 0")

    if v["environment.pressure_pa"] is not None and v["model.gamma_m_hz"] is not None:
        raise ConfigError("model.gamma_m_hz: give either it or environment.pressure_pa, not both")
    has_total = v["environment.g_total_khz"] is not None or v["environment.theta_pol_deg"] is not None
    if has_total:
        if v["environment.g_total_khz"] is None or v["environment.theta_pol_deg"] is None:
            raise ConfigError("environment.g_total_khz: needs environment.theta_pol_deg as well")
        if v["model.g_x_khz"] is not None or v["model.g_y_khz"] is not None:
            raise ConfigError("model.g_x_khz: give either g_x/g_y or g_total/theta_pol, not both")
    if not v["grid.start_khz"] < v["grid.stop_khz"]:
        raise ConfigError("grid.start_khz: must be < grid.stop_khz")
    if not v["fit.start_khz"] < v["fit.stop_khz"]:
        raise ConfigError("fit.start_khz: must be < fit.stop_khz")
    span = (v["grid.stop_khz"] - v["grid.start_khz"]) / v["grid.step_khz"]
    if abs(span - round(span)) > 1e-6 * max(1.0, span):
        raise ConfigError("grid.step_khz: must divide the grid range")

    param = v["sweep.parameter"]
    if param not in SCHEMA or SCHEMA[param][0] != FLOAT or param.split(".")[0] not in (
            "model", "environment"):
        raise ConfigError(f"sweep.parameter: {param!r} is not a numeric model or environment key")
    if v["sweep.values"] is None:
        if v["sweep.step"] <= 0:
            raise ConfigError("sweep.step: must be > 0")
        n = (v["sweep.stop"] - v["sweep.start"]) / v["sweep.step"]
        if n < 0:
            raise ConfigError("sweep.stop: must be >= sweep.start")
        if abs(n - round(n)) > 1e-6 * max(1.0, n):
            raise ConfigError("sweep.step: must divide the sweep range")
    elif len(v["sweep.values"]) == 0:
        raise ConfigError("sweep.values: must list at least one value")
    return RunConfig(v)


# ----------------------------------------------------------------------------- output


def write_csv(path: Path, columns, rows, meta):
    """CSV with ``#`` metadata lines, a header row and ``%.10g`` numbers."""
    buf = io.StringIO()
    for line in meta:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    path.write_text(buf.getvalue())


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, str):
        return x
    return f"{float(x):.10g}"


def _meta(cfg: RunConfig, subcommand, extra=()):
    lines = [f"polaritron {__version__}", f"subcommand: {subcommand}"]
    lines += [f"config {line}" for line in cfg.dumps().splitlines() if line.strip()]
    lines += list(extra)
    return lines


# ----------------------------------------------------------------------------- workers


def _map(func, items, jobs):
    items = list(items)
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(func, items))
    return [func(x) for x in items]


def _occupation_point(args):
    x, params, grid, tail = args
    cold = coldest_angle(params, grid, tail_threshold=tail)
    return x, cold


def cmd_spectrum(cfg: RunConfig, out: Path, jobs: int):
    params = cfg.to_params()
    grid = cfg.grid()
    tail = cfg["grid.tail_threshold"] or None
    theta = math.radians(cfg["spectrum.theta_deg"])
    het = heterodyne_spectrum(params, grid)
    bx, _ = mechanical_spectrum(params, 0.0, grid, tail)
    by, _ = mechanical_spectrum(params, math.pi / 2, grid, tail)
    bt, dt = mechanical_spectrum(params, theta, grid, tail)
    rows = zip(grid.freq_khz, het.values, bx.values, by.values, bt.values, dt.values)
    write_csv(out / "spectrum.csv",
              ["freq_khz", "s_out", "s_bb_x", "s_bb_y", "s_bb_theta", "s_bdagbdag_theta"], rows,
              _meta(cfg, "spectrum", [
                  "units: freq_khz = kHz; s_out in shot-noise units at offset freq_khz from the "
                  "local oscillator (positive = high-frequency sideband); s_bb_* per (rad/s)",
                  f"occupation_x: {bx.integral():.10g}", f"occupation_y: {by.integral():.10g}",
                  f"occupation_theta: {bt.integral():.10g}"]))
    return [out / "spectrum.csv"]


def cmd_dispersion(cfg: RunConfig, out: Path, jobs: int):
    pts = cfg.sweep_params()
    if cfg["sweep.parameter"] != "model.delta_khz":
        raise ConfigError("sweep.parameter: dispersion sweeps need model.delta_khz")
    pts.sort(key=lambda t: t[0])
    curve = dispersion([p for _, p in pts])
    crossings = avoided_crossings(curve)
    photo = curve.photonic_fractions
    rows = []
    for i, (x, _) in enumerate(pts):
        rows.append([x, *to_khz(curve.frequencies[i]), *to_khz(curve.half_widths[i]), *photo[i],
                     curve.ambiguous[i]])
    cols = (["detuning_khz"] + [f"f{k}_khz" for k in (1, 2, 3)] + [f"w{k}_khz" for k in (1, 2, 3)]
            + [f"photfrac{k}" for k in (1, 2, 3)] + ["ambiguous"])
    extra = ["units: frequencies and half-widths in kHz; photfrac = photonic weight of the eigenvector",
             f"avoided_crossings: {len(crossings)}"]
    extra += [f"avoided_crossing {c.mode.upper()}: detuning_khz={to_khz(c.detuning):.6g} "
              f"gap_khz={to_khz(c.gap):.6g}" for c in crossings]
    write_csv(out / "dispersion.csv", cols, rows, _meta(cfg, "dispersion", extra))
    return [out / "dispersion.csv"]


def cmd_occupation(cfg: RunConfig, out: Path, jobs: int):
    grid = cfg.grid()
    tail = cfg["grid.tail_threshold"] or None
    tasks = [(x, p, grid, tail) for x, p in cfg.sweep_params()]
    require_stable(build_drift_matrix(cfg.to_params()))
    for _, p, _, _ in tasks:
        require_stable(build_drift_matrix(p))
    results = _map(_occupation_point, tasks, jobs)
    rows = [[x, c.n_x, c.n_y, math.degrees(c.theta), c.occupation] for x, c in results]
    key = cfg["sweep.parameter"].split(".", 1)[1]
    write_csv(out / "occupation.csv", [key, "n_x", "n_y", "theta_min_deg", "n_min"], rows,
              _meta(cfg, "occupation", ["units: theta in degrees from X towards Y"]))

    _, cold = _occupation_point((None, cfg.to_params(), grid, tail))
    step = cfg["occupation.theta_step_deg"]
    thetas = np.arange(-90.0, 90.0 + 1e-9, step)
    rows = [[t, cold.occupation_at(math.radians(t))] for t in thetas]
    write_csv(out / "occupation_theta.csv", ["theta_deg", "occupation"], rows,
              _meta(cfg, "occupation", [f"theta_min_deg: {math.degrees(cold.theta):.10g}",
                                        f"n_min: {cold.occupation:.10g}"]))
    return [out / "occupation.csv", out / "occupation_theta.csv"]


def _read_spectrum_csv(path):
    """First two columns of a CSV (``#`` comments, one header row): kHz and value."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    if len(rows) < 3 or len(rows[0]) < 2:
        raise ConfigError("fit.input: needs a header row and frequency/value columns")
    try:
        values = np.array([[float(r[0]), float(r[1])] for r in rows[1:]])
    except ValueError:
        raise ConfigError("fit.input: non-numeric data row") from None
    freq = values[:, 0]
    step = np.diff(freq)
    if np.any(step <= 0) or np.ptp(step) > 1e-6 * abs(step.mean()):
        raise ConfigError("fit.input: frequencies must be uniformly spaced and increasing")
    grid = FrequencyGrid(khz(freq[0]), khz(freq[-1]), freq.size)
    return Spectrum(grid, values[:, 1], "heterodyne", None, None, {"columns": rows[0][:2]})


def cmd_fit(cfg: RunConfig, out: Path, jobs: int):
    n_peaks = cfg["fit.n_peaks"]
    if cfg["fit.input"]:
        spec = _read_spectrum_csv(cfg["fit.input"])
        source = f"input: {cfg['fit.input']}"
    else:
        params = cfg.to_params()
        grid = FrequencyGrid.from_khz(cfg["fit.start_khz"], cfg["fit.stop_khz"], cfg["fit.step_khz"])
        spec = heterodyne_spectrum(params, grid)
        source = "input: model heterodyne spectrum"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateFitWarning)
        try:
            fit = fit_lorentzians(spec, n_peaks)
        except SeedingError:
            fit = fit_lorentzians_stagewise(spec, n_peaks)
    rows = [[k + 1, to_khz(c), to_khz(w), a, fit.offset, fit.residual_rms, fit.converged,
             fit.overlapping]
            for k, (c, w, a) in enumerate(zip(fit.centers, fit.half_widths, fit.areas))]
    extra = [source, "units: center and half-width in kHz; area in spectrum units x rad/s"]
    if caught:
        extra.append("warning: fitted peaks overlap")
    write_csv(out / "fit.csv", ["peak", "center_khz", "half_width_khz", "area", "offset",
                                "residual_rms", "converged", "overlapping"], rows,
              _meta(cfg, "fit", extra))
    return [out / "fit.csv"]


def cmd_asymmetry(cfg: RunConfig, out: Path, jobs: int):
    params = cfg.to_params()
    target = khz(cfg["asymmetry.target_khz"]) if cfg["asymmetry.target_khz"] else None
    window = None
    if cfg["asymmetry.window_start_khz"] is not None and cfg["asymmetry.window_stop_khz"] is not None:
        window = (khz(cfg["asymmetry.window_start_khz"]), khz(cfg["asymmetry.window_stop_khz"]))
    res = sideband_asymmetry(params, target=target, window=window,
                             n_peaks=cfg["asymmetry.n_peaks"])
    low = res.low_sideband
    rows = zip(low.freq_khz, low.values, res.reference.values - 0.0)
    write_csv(out / "asymmetry.csv", ["sideband_freq_khz", "low_sideband", "classical_reference"],
              rows, _meta(cfg, "asymmetry", [
                  "units: sideband frequency |Omega - Omega_LO| in kHz; spectra in shot-noise "
                  "units with the shot-noise floor removed",
                  f"ratio: {res.ratio:.10g}", f"inferred_n: {res.inferred_n:.10g}",
                  f"unreliable: {int(res.unreliable)}"]))
    return [out / "asymmetry.csv"]


def cmd_budget(cfg: RunConfig, out: Path, jobs: int):
    params = cfg.to_params()
    env = cfg.environment()
    require_stable(build_drift_matrix(params))
    lines = [f"# {line}" for line in _meta(cfg, "budget")]
    for axis in ("x", "y"):
        b = decoherence_budget(params, env, axis)
        k = b.khz()
        lines.append(f"[{axis.upper()}] thermal_khz={k['thermal']:.6g} recoil_khz={k['recoil']:.6g} "
                     f"total_khz={k['total']:.6g} coupling_khz={k['coupling']:.6g} "
                     f"coherent={int(b.coherent)}")
    t = strong_coupling_thresholds(params, env)
    lines.append(f"single_mode_strong_x={int(t.single_mode_x)} single_mode_strong_y={int(t.single_mode_y)}")
    lines.append(f"two_mode_strong={int(t.two_mode)} gx_gy_khz2={t.two_mode_product / khz(1) ** 2:.6g} "
                 f"bound_khz2={t.two_mode_bound / khz(1) ** 2:.6g}")
    (out / "budget.txt").write_text("\n".join(lines) + "\n")
    return [out / "budget.txt"]


def cmd_oracle(cfg: RunConfig, out: Path, jobs: int):
    from .oracle import TrajectoryConfig, psd, scaled_bath, simulate_classical

    seed = cfg["oracle.seed"]
    env_seed = os.environ.get("POLARITRON_SEED")
    if env_seed:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"POLARITRON_SEED: not an integer: {env_seed!r}") from None
    n_th = cfg["oracle.n_th"]
    params = scaled_bath(cfg.to_params(), n_th)
    require_stable(build_drift_matrix(params))
    res = cfg["oracle.resolution_hz"]
    tcfg = TrajectoryConfig.for_params(params, cfg["oracle.duration_s"], seed=seed,
                                       burn_in_time=50 / res, sample_dt=cfg["oracle.sample_dt_s"])
    traj = simulate_classical(params, tcfg)
    seg = int(round(1.0 / (res * traj.sample_dt)))
    spec = psd(traj.b_x, seg, traj.sample_dt, params=params)
    from .langevin import eigensolve

    sol = eigensolve(build_drift_matrix(params))
    k = int(np.argmax(sol.compositions[:, 1]))
    center, width = sol.frequencies[k], 2 * sol.half_widths[k]
    half = cfg["oracle.window_widths"] * width
    w = spec.omega
    mask = (w >= center - half) & (w <= center + half)
    if mask.sum() < 3:
        raise GridTooNarrowError("oracle.resolution_hz: too coarse to resolve the X peak")
    grid = FrequencyGrid(w[mask][0], w[mask][-1], int(mask.sum()))
    analytic, _ = mechanical_spectrum(params, 0.0, grid, tail_threshold=None, classical=True)
    rel = (spec.values[mask] - analytic.values) / analytic.values
    rms = float(np.sqrt(np.mean(rel ** 2)))
    rows = zip(grid.freq_khz, spec.values[mask], analytic.values)
    write_csv(out / "oracle.csv", ["freq_khz", "psd_sde", "s_bb_classical"], rows,
              _meta(cfg, "oracle", [f"seed: {seed}", f"dt_s: {tcfg.dt:.10g}",
                                    f"segments: {spec.meta['segments']}",
                                    f"rms_relative_deviation: {rms:.6g}",
                                    f"variance_b_x: {np.mean(np.abs(traj.b_x) ** 2):.10g}"]))
    return [out / "oracle.csv"]


COMMANDS = {"spectrum": cmd_spectrum, "dispersion": cmd_dispersion, "occupation": cmd_occupation,
            "fit": cmd_fit, "asymmetry": cmd_asymmetry, "budget": cmd_budget, "oracle": cmd_oracle}


def run(subcommand: str, cfg: RunConfig, out=None, jobs=1):
    """Run one subcommand; returns the list of written files."""
    out = Path(out if out is not None else cfg["output.dir"])
    out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[subcommand](cfg, out, jobs)


def build_parser():
    parser = argparse.ArgumentParser(prog="polaritron", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"polaritron {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI config file; omitted means all defaults")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker processes for sweeps (default: all CPUs)")
        p.add_argument("--grid-start", type=float, help="grid start, kHz")
        p.add_argument("--grid-stop", type=float, help="grid stop, kHz")
        p.add_argument("--grid-step", type=float, help="grid step, kHz")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        cfg = load_config(args.config) if args.config else validate({})
        overrides = {k: v for k, v in (("grid.start_khz", args.grid_start),
                                       ("grid.stop_khz", args.grid_stop),
                                       ("grid.step_khz", args.grid_step)) if v is not None}
        if overrides:
            cfg = validate({**cfg.values, **overrides})
        if args.jobs < 1:
            raise ConfigError("--jobs: must be >= 1")
        files = run(args.subcommand, cfg, args.out, args.jobs)
    except ConfigError as exc:
        print(f"polaritron: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnstableSystemError as exc:
        print(f"polaritron: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except OSError as exc:
        print(f"polaritron: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GridTooNarrowError, SingularSystemError, EigenSolveError, IsotropicError,
            SeedingError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"polaritron: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"polaritron: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
