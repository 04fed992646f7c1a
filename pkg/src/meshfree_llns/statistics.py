"""Equilibrium variance, density-mode time covariance and shock tracking."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import DegenerateFieldError, InsufficientDataError, InvalidConfigError
from .gas_model import GasModel, PrimitiveState, momentum_energy, sound_speed, thermal_conductivity, viscosity
from .particle_field import ParticleField


@numba.njit(cache=True)
def _neumaier(total, comp, values):
    for v in values:
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total, comp


@dataclass
class Moments:
    """Compensated running sums of ``v - shift`` and ``(v - shift)**2``.

    The shift is fixed by the first value seen, which keeps the
    ``E[v^2] - E[v]^2`` form well conditioned.
    """

    n: int = 0
    shift: float = 0.0
    s1: float = 0.0
    c1: float = 0.0
    s2: float = 0.0
    c2: float = 0.0

    def add(self, values):
        v = np.asarray(values, dtype=float).ravel()
        if v.size == 0:
            return self
        if self.n == 0:
            self.shift = float(v[0])
        d = v - self.shift
        self.s1, self.c1 = _neumaier(self.s1, self.c1, d)
        self.s2, self.c2 = _neumaier(self.s2, self.c2, d * d)
        self.n += v.size
        return self

    def add_sums(self, counts, sums, sums_sq, refs=None):
        """Add pre-reduced groups given by their sizes and the sums of
        ``v - ref`` and ``(v - ref)**2`` (``ref`` defaults to zero)."""
        counts = np.asarray(counts, dtype=float)
        sums = np.asarray(sums, dtype=float)
        sums_sq = np.asarray(sums_sq, dtype=float)
        refs = np.zeros_like(sums) if refs is None else np.asarray(refs, dtype=float)
        if counts.size == 0:
            return self
        if self.n == 0:
            self.shift = float(refs[0] + sums[0] / counts[0])
        c = refs - self.shift
        d1 = sums + counts * c
        d2 = sums_sq + 2.0 * c * sums + counts * c * c
        self.s1, self.c1 = _neumaier(self.s1, self.c1, d1)
        self.s2, self.c2 = _neumaier(self.s2, self.c2, d2)
        self.n += int(counts.sum())
        return self

    def merge(self, other: "Moments") -> "Moments":
        if other.n == 0:
            return self
        if self.n == 0:
            self.__dict__.update(other.__dict__)
            return self
        delta = other.shift - self.shift
        o1 = other.s1 + other.c1
        o2 = other.s2 + other.c2
        self.s1, self.c1 = _neumaier(self.s1, self.c1, np.array([o1, other.n * delta]))
        self.s2, self.c2 = _neumaier(self.s2, self.c2,
                                     np.array([o2, 2.0 * delta * o1, other.n * delta * delta]))
        self.n += other.n
        return self

    def mean(self) -> float:
        if self.n == 0:
            raise InsufficientDataError("no samples")
        return self.shift + (self.s1 + self.c1) / self.n

    def variance(self) -> float:
        if self.n < 2:
            raise InsufficientDataError(f"variance needs at least 2 values, have {self.n}")
        m1 = (self.s1 + self.c1) / self.n
        return max((self.s2 + self.c2) / self.n - m1 * m1, 0.0)


@dataclass
class StatsAccumulator:
    """Global particle statistics of rho, J and E over sampled steps."""

    rho: Moments = field(default_factory=Moments)
    J: Moments = field(default_factory=Moments)
    E: Moments = field(default_factory=Moments)
    n_samples: int = 0

    @property
    def count(self) -> int:
        return self.rho.n

    def merge(self, other: "StatsAccumulator") -> "StatsAccumulator":
        self.rho.merge(other.rho)
        self.J.merge(other.J)
        self.E.merge(other.E)
        self.n_samples += other.n_samples
        return self

    def add_observations(self, obs: np.ndarray) -> "StatsAccumulator":
        """Add rows of the integrator's per-step observable record."""
        if len(obs) == 0:
            return self
        M = obs[:, 0]
        self.rho.add_sums(M, obs[:, 2], obs[:, 3], obs[:, 1])
        self.J.add_sums(M, obs[:, 5], obs[:, 6], obs[:, 4])
        self.E.add_sums(M, obs[:, 8], obs[:, 9], obs[:, 7])
        self.n_samples += len(obs)
        return self


def accumulate(acc: StatsAccumulator, field: ParticleField, gas: GasModel) -> StatsAccumulator:
    if len(field) == 0:
        return acc
    J, E = momentum_energy(field.rho, field.u, field.T, gas)
    acc.rho.add(field.rho)
    acc.J.add(J)
    acc.E.add(E)
    acc.n_samples += 1
    return acc


def variance(acc: StatsAccumulator):
    """``(Var rho, Var J, Var E)`` as ``E[v^2] - E[v]^2`` over all particle samples."""
    return acc.rho.variance(), acc.J.variance(), acc.E.variance()


def means(acc: StatsAccumulator):
    return acc.rho.mean(), acc.J.mean(), acc.E.mean()


# ---------------------------------------------------------------------------
# time covariance of the density Fourier mode


@dataclass
class ModeSeries:
    times: np.ndarray
    R: np.ndarray
    n: int = 1

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class HydroParams:
    gamma: float
    c_s: float
    D_T: float
    D_v: float
    L: float

    @property
    def Gamma(self) -> float:
        return 0.5 * (self.D_v + (self.gamma - 1.0) * self.D_T)

    @classmethod
    def from_gas(cls, gas: GasModel, rho: float, T: float, L: float) -> "HydroParams":
        eta = float(viscosity(T, gas))
        kappa = float(thermal_conductivity(eta, gas))
        return cls(gamma=gas.gamma, c_s=float(sound_speed(T, gas)), D_T=kappa / (rho * gas.cv),
                   D_v=4.0 / 3.0 * eta / rho, L=L)

    def wavenumber(self, n: int = 1) -> float:
        return 2.0 * math.pi * n / self.L


def density_mode(field: ParticleField, n: int = 1, L: float | None = None) -> float:
    """``(1/M) sum_i rho_i sin(2 pi n x_i / L)``, positions measured from the domain start."""
    if len(field) == 0:
        raise DegenerateFieldError("empty field")
    L = field.length if L is None else L
    x = field.x - field.domain[0]
    return float(np.mean(field.rho * np.sin(2.0 * math.pi * n * x / L)))


def time_covariance(series: ModeSeries | np.ndarray, lag: int) -> float:
    """Mean of lagged products ``R(t) R(t + lag)`` over all admissible origins."""
    R = np.asarray(series.R if isinstance(series, ModeSeries) else series, dtype=float)
    if lag < 0 or R.size - lag < 1:
        raise InsufficientDataError(f"series of length {R.size} too short for lag {lag}")
    return float(np.dot(R[: R.size - lag], R[lag:]) / (R.size - lag))


def time_covariance_with_errors(R, lags, n_batches: int = 20):
    """Covariance estimates on ``lags`` plus batch-means standard errors.

    Each batch is a contiguous block; products straddling block edges are
    assigned to the block of their origin.
    """
    R = np.asarray(R, dtype=float)
    lags = np.asarray(lags, dtype=int)
    if R.size - lags.max() < n_batches * 2:
        raise InsufficientDataError("series too short for the requested lags and batches")
    est = np.array([time_covariance(R, int(k)) for k in lags])
    n_orig = R.size - lags.max()
    edges = np.linspace(0, n_orig, n_batches + 1).astype(int)
    per = np.empty((n_batches, lags.size))
    for b in range(n_batches):
        a, e = edges[b], edges[b + 1]
        for j, k in enumerate(lags):
            per[b, j] = np.dot(R[a:e], R[a + k:e + k]) / (e - a)
    se = per.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return est, se


def analytical_time_covariance(p: HydroParams, omega: float, tau, varR: float):
    """Linearized-hydrodynamics density autocovariance of one Fourier mode."""
    tau = np.asarray(tau, dtype=float)
    g = p.gamma
    k2 = omega * omega
    decay = np.exp(-k2 * p.Gamma * tau)
    phase = p.c_s * omega * tau
    out = ((1.0 - 1.0 / g) * np.exp(-k2 * p.D_T * tau)
           + (1.0 / g) * decay * np.cos(phase)
           + (3.0 * p.Gamma - p.D_v) / (g * g * p.c_s) * omega * decay * np.sin(phase)) * varR
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# standing shock


@numba.njit(cache=True)
def domain_mean_density(x, rho, x_min, L, rho_left, rho_right, dx_left, dx_right):
    """Integral of rho over ``[x_min, x_min + L]`` divided by L.

    Each particle owns the span between midpoints to its neighbors. Beyond
    the edge particles the span reaches half a boundary spacing outward, and
    whatever remains up to the domain edge carries the boundary state. All
    spans are clipped to the domain, so inserting a boundary-state particle
    in a region that already counted as boundary state changes nothing.
    """
    n = x.size
    x_max = x_min + L
    b_prev = min(max(x[0] - 0.5 * dx_left, x_min), x_max)
    total = rho_left * (b_prev - x_min)
    for i in range(n):
        b = x[i] + 0.5 * dx_right if i == n - 1 else 0.5 * (x[i] + x[i + 1])
        b = min(max(b, x_min), x_max)
        total += rho[i] * (b - b_prev)
        b_prev = b
    total += rho_right * (x_max - b_prev)
    return total / L


def average_density(field: ParticleField, weighting: str = "arithmetic") -> float:
    """Instantaneous mean density: plain particle mean or domain integral / L."""
    if weighting == "arithmetic":
        return float(np.mean(field.rho))
    if weighting != "volume":
        raise ValueError(f"unknown weighting {weighting!r}")
    if field.periodic:
        x = field.x
        gaps = np.diff(np.append(x, x[0] + field.length))
        width = 0.5 * (gaps + np.roll(gaps, 1))
        return float(np.sum(field.rho * width) / field.length)
    bc = field.boundary
    return float(domain_mean_density(field.x, field.rho, field.domain[0], field.length,
                                     bc.left.rho, bc.right.rho, bc.dx_left, bc.dx_right))


def shock_location_from_mean(rho_bar, rho_L: float, rho_R: float, L: float):
    if rho_L == rho_R:
        raise DegenerateFieldError("left and right densities coincide")
    return L * (np.asarray(rho_bar) - 0.5 * (rho_L + rho_R)) / (rho_L - rho_R)


def shock_location(field: ParticleField, rho_L: float, rho_R: float, L: float | None = None,
                   weighting: str = "arithmetic") -> float:
    """Shock position relative to the domain center from the mean density."""
    L = field.length if L is None else L
    return float(shock_location_from_mean(average_density(field, weighting), rho_L, rho_R, L))


def rankine_hugoniot(mach: float, right: PrimitiveState, gas: GasModel) -> PrimitiveState:
    """Downstream (left) state of a standing normal shock fed from the right.

    The upstream velocity is ``-mach * c_s(T_R)`` regardless of ``right.u``.
    """
    if not mach > 1:
        raise InvalidConfigError(f"Mach number must exceed 1, got {mach}")
    g = gas.gamma
    m2 = mach * mach
    density_ratio = (g + 1.0) * m2 / ((g - 1.0) * m2 + 2.0)
    temperature_ratio = (2.0 * g * m2 - (g - 1.0)) * ((g - 1.0) * m2 + 2.0) / ((g + 1.0) ** 2 * m2)
    u_R = -mach * float(sound_speed(right.T, gas))
    rho_L = right.rho * density_ratio
    return PrimitiveState(rho=rho_L, u=u_R * right.rho / rho_L, T=right.T * temperature_ratio)
