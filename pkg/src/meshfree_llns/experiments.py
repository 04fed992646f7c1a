"""Experiment configuration, scenario runners and report emission."""
from __future__ import annotations

import csv
import dataclasses
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import maccormack as mc
from . import particle_field as pf
from . import statistics as st
from .errors import InvalidConfigError, MeshfreeError
from .gas_model import GasModel, PrimitiveState, sound_speed
from .stochastic_flux import MACCORMACK_CORRECTION, NoiseStream

SCENARIOS = ("equilibrium_zero_flow", "equilibrium_net_flow", "time_covariance", "standing_shock")

# Reference ("exact") variances of the conserved quantities at equilibrium for
# the Argon reference box: zero net flow and net flow at half the sound speed.
REFERENCE_VARIANCE = {
    "equilibrium_zero_flow": {"rho": 2.35e-8, "J": 13.34, "E": 2.84e10},
    "equilibrium_net_flow": {"rho": 2.35e-8, "J": 18.91, "E": 3.67e10},
}
# values reported for the original meshfree MacCormack runs, for comparison only
PUBLISHED_MEASURED = {
    "equilibrium_zero_flow": {"rho": 2.11e-8, "J": 13.33, "E": 2.68e10},
    "equilibrium_net_flow": {"rho": 2.12e-8, "J": 19.01, "E": 3.85e10},
}

REFERENCE_SOUND_SPEED = 30781.0  # cm/s


@dataclass
class ExperimentConfig:
    scenario: str = "equilibrium_zero_flow"
    # gas
    d: float = 3.66e-8  # cm
    M: float = 6.63e-23  # g
    kB: float = 1.380649e-16  # erg/K
    gamma: float = 5.0 / 3.0
    # domain and discretization
    L: float = 1.25e-4  # cm
    N: int = 40
    dt: float = 1.0e-13  # s
    h_factor: float = 3.0
    sigma: float = 1.568e-12  # cm^2, cross-section = system volume / L
    # reference / right state
    rho0: float = 1.78e-3  # g/cm^3
    T0: float = 273.0  # K
    net_flow_velocity: float = 0.0  # cm/s
    mach: float = 0.0
    # run control
    n_steps: int = 1_000_000
    n_skip: int = 10_000
    n_relax: int = 0  # noise-free steps applied to the initial field before the clock starts
    seed: int = 1
    ensemble: int = 1
    threads: int = 1
    noise: bool = True
    correction: float = MACCORMACK_CORRECTION
    # time covariance
    mode_n: int = 1
    n_lags: int = 100
    tau_max: float = 2.0e-9  # s
    n_batches: int = 20
    # shock
    sample_every: int = 1000  # steps between shock-position samples (21 points over 2e4 steps)
    weighting: str = "volume"
    output: str = ""

    def gas(self) -> GasModel:
        return GasModel(d=self.d, M=self.M, kB=self.kB, gamma=self.gamma)

    def scheme(self) -> mc.SchemeConfig:
        return mc.SchemeConfig(dt=self.dt, noise_enabled=self.noise, correction=self.correction,
                               sigma=self.sigma)

    def validate(self) -> "ExperimentConfig":
        errs = []
        if self.scenario not in SCENARIOS:
            errs.append(f"scenario must be one of {', '.join(SCENARIOS)}")
        for name in ("d", "M", "kB", "L", "dt", "h_factor", "sigma", "rho0", "T0", "tau_max"):
            if not getattr(self, name) > 0:
                errs.append(f"{name} must be positive")
        if not self.gamma > 1:
            errs.append("gamma must exceed 1")
        if self.N < 4:
            errs.append("N must be at least 4")
        for name in ("n_steps", "ensemble", "threads", "mode_n", "n_lags", "n_batches", "sample_every"):
            if getattr(self, name) < 1:
                errs.append(f"{name} must be at least 1")
        if self.n_skip < 0 or self.n_relax < 0:
            errs.append("n_skip and n_relax must be non-negative")
        if self.scenario == "standing_shock" and not self.mach > 1:
            errs.append("standing_shock requires mach > 1")
        if self.weighting not in ("arithmetic", "volume"):
            errs.append("weighting must be 'arithmetic' or 'volume'")
        if errs:
            raise InvalidConfigError("invalid configuration: " + "; ".join(errs))
        return self


PRESETS = {
    "table1-equilibrium": dict(scenario="equilibrium_zero_flow"),
    "table1-netflow": dict(scenario="equilibrium_net_flow",
                           net_flow_velocity=0.5 * REFERENCE_SOUND_SPEED),
    "table1-covariance": dict(scenario="time_covariance"),
    "table4-shock-mach2": dict(scenario="standing_shock", L=5.0e-4, N=160, mach=2.0,
                               n_steps=20_000, n_skip=0, ensemble=100),
    "shock-mach1.4": dict(scenario="standing_shock", L=5.0e-4, N=160, mach=1.4,
                          n_steps=20_000, n_skip=0, ensemble=100),
}

DEFAULT_PRESET = {
    "equilibrium_zero_flow": "table1-equilibrium",
    "equilibrium_net_flow": "table1-netflow",
    "time_covariance": "table1-covariance",
    "standing_shock": "table4-shock-mach2",
}


def preset(name: str, **overrides) -> ExperimentConfig:
    try:
        values = dict(PRESETS[name])
    except KeyError:
        raise InvalidConfigError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None
    values.update(overrides)
    return ExperimentConfig(**values).validate()


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(name, raw, lineno):
    kind = type(getattr(ExperimentConfig(), name))
    try:
        if kind is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind is int:
            v = float(raw)
            if v != int(v):
                raise ValueError(raw)
            return int(v)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise InvalidConfigError(f"line {lineno}: cannot parse {name} = {raw!r} as {kind.__name__}") from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    A ``preset = NAME`` line, if present, supplies defaults for every key
    not set explicitly; otherwise the scenario's default preset is used.
    """
    values = {}
    base = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key == "preset":
            base = raw
            continue
        if key not in _FIELDS:
            raise InvalidConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw, lineno)
    if base is None:
        base = DEFAULT_PRESET.get(values.get("scenario", "equilibrium_zero_flow"))
    merged = dict(PRESETS.get(base, {})) if base else {}
    if base is not None and base not in PRESETS:
        raise InvalidConfigError(f"unknown preset {base!r}")
    merged.update(values)
    return ExperimentConfig(**merged).validate()


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {repr(v) if isinstance(v, float) else v}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# reports


@dataclass
class RunReport:
    scenario: str
    table: list = field(default_factory=list)  # (quantity, exact, measured, percent_error)
    series_columns: tuple = ()
    series: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    diagnostics: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def measured(self, quantity):
        for q, _, m, _ in self.table:
            if q == quantity:
                return m
        raise KeyError(quantity)


def percent_error(measured: float, exact: float) -> float:
    return 100.0 * (measured - exact) / exact


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def report_csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if report.series_columns:
        w.writerow(report.series_columns)
        for row in report.series:
            w.writerow([_fmt(v) for v in row])
    else:
        w.writerow(["quantity", "exact", "measured", "percent_error"])
        for row in report.table:
            w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def report_summary(report: RunReport) -> str:
    out = [f"scenario: {report.scenario}"]
    if report.table:
        out.append(f"{'quantity':<10}{'exact':>14}{'measured':>14}{'error %':>10}")
        for q, ex, me, pe in report.table:
            out.append(f"{q:<10}{ex:>14.4g}{me:>14.4g}{pe:>+10.2f}")
    for k in sorted(report.diagnostics):
        v = report.diagnostics[k]
        out.append(f"{k}: {v:.6g}" if isinstance(v, float) else f"{k}: {v}")
    out.append(f"wall_time_s: {report.wall_time:.1f}")
    return "\n".join(out) + "\n"


def emit_report(report: RunReport, path) -> Path:
    """Write ``path`` (CSV) and ``path`` with suffix ``.summary.txt``."""
    path = Path(path)
    try:
        path.write_text(report_csv(report))
        path.with_suffix(".summary.txt").write_text(report_summary(report))
    except OSError as exc:
        raise MeshfreeError(f"cannot write report to {path}: {exc}") from exc
    return path


# ---------------------------------------------------------------------------
# runners


def _periodic_field(cfg: ExperimentConfig) -> pf.ParticleField:
    u0 = cfg.net_flow_velocity if cfg.scenario == "equilibrium_net_flow" else 0.0
    return pf.init_uniform(cfg.L, cfg.N, PrimitiveState(cfg.rho0, u0, cfg.T0),
                           h_factor=cfg.h_factor)


def _equilibrium_member(cfg: ExperimentConfig, member: int):
    gas = cfg.gas()
    it = mc.Integrator(_periodic_field(cfg), gas, cfg.scheme(), NoiseStream(cfg.seed, member))
    if cfg.n_skip:
        it.advance(cfg.n_skip)
    acc = st.StatsAccumulator()
    chunk = 100_000
    done = 0
    while done < cfg.n_steps:
        k = min(chunk, cfg.n_steps - done)
        acc.add_observations(it.advance(k))
        done += k
    return acc, it.totals


def _map(fn, cfg, members):
    if cfg.threads > 1 and len(members) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as ex:
            return list(ex.map(fn, [cfg] * len(members), members))
    return [fn(cfg, m) for m in members]


def _merge_totals(totals):
    t = mc.RunTotals()
    for o in totals:
        t.steps += o.steps
        t.particles_added += o.particles_added
        t.particles_removed += o.particles_removed
        t.events += o.events
        t.max_cfl_advective = max(t.max_cfl_advective, o.max_cfl_advective)
        t.max_cfl_diffusive = max(t.max_cfl_diffusive, o.max_cfl_diffusive)
    return t


def _totals_dict(t: mc.RunTotals) -> dict:
    return {"steps": t.steps, "particles_added": t.particles_added,
            "particles_removed": t.particles_removed, "management_events": t.events,
            "max_cfl_advective": t.max_cfl_advective, "max_cfl_diffusive": t.max_cfl_diffusive}


def run_equilibrium(cfg: ExperimentConfig) -> RunReport:
    if cfg.scenario not in ("equilibrium_zero_flow", "equilibrium_net_flow"):
        raise InvalidConfigError(f"run_equilibrium cannot run scenario {cfg.scenario!r}")
    t0 = time.perf_counter()
    results = _map(_equilibrium_member, cfg, list(range(cfg.ensemble)))
    acc = st.StatsAccumulator()
    for a, _ in results:
        acc.merge(a)
    var = dict(zip(("rho", "J", "E"), st.variance(acc)))
    ref = REFERENCE_VARIANCE[cfg.scenario]
    table = [(q, ref[q], var[q], percent_error(var[q], ref[q])) for q in ("rho", "J", "E")]
    m_rho, m_J, m_E = st.means(acc)
    diag = _totals_dict(_merge_totals([t for _, t in results]))
    diag.update(samples=acc.n_samples, particle_samples=acc.count, mean_rho=m_rho, mean_J=m_J,
                mean_E=m_E)
    return RunReport(cfg.scenario, table=table, diagnostics=diag,
                     wall_time=time.perf_counter() - t0)


def covariance_lags(cfg: ExperimentConfig) -> np.ndarray:
    taus = np.linspace(0.0, cfg.tau_max, cfg.n_lags)
    return np.round(taus / cfg.dt).astype(int)


def run_time_covariance(cfg: ExperimentConfig) -> RunReport:
    if cfg.scenario != "time_covariance":
        raise InvalidConfigError(f"run_time_covariance cannot run scenario {cfg.scenario!r}")
    t0 = time.perf_counter()
    gas = cfg.gas()
    field0 = _periodic_field(cfg)
    it = mc.Integrator(field0, gas, cfg.scheme(), NoiseStream(cfg.seed, 0), mode_n=cfg.mode_n)
    if cfg.n_skip:
        it.advance(cfg.n_skip)
    lags = covariance_lags(cfg)
    obs = it.advance(cfg.n_steps + int(lags.max()))
    R = obs[:, mc.OBS_COLUMNS.index("mode")]
    est, se = st.time_covariance_with_errors(R, lags, cfg.n_batches)
    p = st.HydroParams.from_gas(gas, cfg.rho0, cfg.T0, cfg.L)
    theory = st.analytical_time_covariance(p, p.wavenumber(cfg.mode_n), lags * cfg.dt, est[0])
    within = np.abs(est - theory) <= 4.0 * se
    diag = _totals_dict(it.totals)
    diag.update(var_R=float(est[0]), fraction_within_4se=float(within.mean()),
                sound_attenuation=p.Gamma, thermal_diffusivity=p.D_T, viscous_diffusivity=p.D_v)
    series = np.column_stack([lags * cfg.dt, est, se, theory])
    return RunReport(cfg.scenario, series_columns=("tau", "cov_measured", "stderr", "cov_theory"),
                     series=series, diagnostics=diag, wall_time=time.perf_counter() - t0)


def shock_field(cfg: ExperimentConfig, gas: GasModel):
    """Standing shock at x = 0 on ``(-L/2, L/2)``; returns ``(field, left, right)``.

    Upstream (right) particles sit at spacing L/N; downstream ones are
    compressed by the density ratio so every particle carries the same mass.
    """
    u_R = -cfg.mach * float(sound_speed(cfg.T0, gas))
    right = PrimitiveState(cfg.rho0, u_R, cfg.T0)
    left = st.rankine_hugoniot(cfg.mach, right, gas)
    dx0 = cfg.L / cfg.N
    dx_left = dx0 * right.rho / left.rho
    half = 0.5 * cfg.L
    xr = (np.arange(int(round(half / dx0))) + 0.5) * dx0
    xl = -((np.arange(int(math.floor(half / dx_left))) + 0.5) * dx_left)[::-1]
    x = np.concatenate([xl, xr])
    on_left = x < 0
    f = pf.ParticleField(
        x=x,
        rho=np.where(on_left, left.rho, right.rho),
        u=np.where(on_left, left.u, right.u),
        T=np.where(on_left, left.T, right.T),
        domain=(-half, half),
        boundary=pf.FixedState(left, right, dx_left, dx0),
        dx0=dx0,
        h=cfg.h_factor * dx0,
    )
    return f, left, right


_RELAXED = {}


def relaxed_shock_field(cfg: ExperimentConfig, gas: GasModel):
    """``shock_field`` advanced ``n_relax`` steps without noise (cached per config).

    Lets the initial step profile settle, including the particle merges it
    triggers, before fluctuations are switched on.
    """
    key = dump_config(dataclasses.replace(cfg, seed=0, ensemble=1, threads=1, output=""))
    if key not in _RELAXED:
        f, left, right = shock_field(cfg, gas)
        if cfg.n_relax:
            quiet = dataclasses.replace(cfg.scheme(), noise_enabled=False)
            it = mc.Integrator(f, gas, quiet, None)
            it.advance(cfg.n_relax)
            f = it.sync()
        _RELAXED.clear()
        _RELAXED[key] = (f, left, right)
    f, left, right = _RELAXED[key]
    return f.copy(), left, right


def _shock_member(cfg: ExperimentConfig, member: int):
    gas = cfg.gas()
    f, left, right = relaxed_shock_field(cfg, gas)
    it = mc.Integrator(f, gas, cfg.scheme(), NoiseStream(cfg.seed, member))
    col = mc.OBS_COLUMNS.index("rho_vol_mean" if cfg.weighting == "volume" else "rho_mean")
    rho0 = st.average_density(f, cfg.weighting)
    if cfg.n_skip:
        it.advance(cfg.n_skip)
    obs = it.advance(cfg.n_steps)
    rho_bar = np.concatenate([[rho0], obs[cfg.sample_every - 1::cfg.sample_every, col]])
    return st.shock_location_from_mean(rho_bar, left.rho, right.rho, cfg.L), it.totals


def fit_line(t, y):
    """Least-squares slope, intercept and R^2."""
    A = np.column_stack([t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 0.0
    return float(coef[0]), float(coef[1]), r2


def moving_average(y, width=5):
    return np.convolve(y, np.ones(width) / width, mode="valid")


def ensemble_variance(sig):
    """Per-column population variance of ``sig`` (members x times).

    Deviations from the first member are taken first, so columns of identical
    values give exactly zero.
    """
    sig = np.asarray(sig, dtype=float)
    if sig.shape[0] < 2:
        return np.zeros(sig.shape[1])
    return (sig - sig[0]).var(axis=0)


def run_shock(cfg: ExperimentConfig) -> RunReport:
    if cfg.scenario != "standing_shock":
        raise InvalidConfigError(f"run_shock cannot run scenario {cfg.scenario!r}")
    t0 = time.perf_counter()
    results = _map(_shock_member, cfg, list(range(cfg.ensemble)))
    sig = np.array([s for s, _ in results])  # (ensemble, times)
    times = (cfg.n_skip + np.arange(sig.shape[1]) * cfg.sample_every) * cfg.dt
    times[0] = 0.0
    var = ensemble_variance(sig)
    slope, intercept, r2 = fit_line(times, var)
    smooth = moving_average(var)
    diag = _totals_dict(_merge_totals([t for _, t in results]))
    diag.update(ensemble=cfg.ensemble, mach=cfg.mach, slope=slope, intercept=intercept,
                r_squared=r2, smoothed_monotone=bool(np.all(np.diff(smooth) >= 0)),
                smoothed_max_drop=float(max(0.0, -np.diff(smooth).min())) if smooth.size > 1 else 0.0,
                weighting=cfg.weighting)
    series = np.column_stack([times, var, sig.mean(axis=0)])
    return RunReport(cfg.scenario, series_columns=("t", "var_sigma", "mean_sigma"), series=series,
                     diagnostics=diag, wall_time=time.perf_counter() - t0)


RUNNERS = {
    "equilibrium_zero_flow": run_equilibrium,
    "equilibrium_net_flow": run_equilibrium,
    "time_covariance": run_time_covariance,
    "standing_shock": run_shock,
}


def run(cfg: ExperimentConfig) -> RunReport:
    return RUNNERS[cfg.validate().scenario](cfg)
