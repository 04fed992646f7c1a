"""Two-stage MacCormack integration of the Lagrangian 1D fluctuating Navier-Stokes system.

One full step:

1. predictor: forward-Euler update of (x, rho, u, T) from the current
   state with fresh noise;
2. corrector: the same update applied to the predicted state (predicted
   positions included) with independent fresh noise;
3. final: componentwise average of the current and the twice-updated state;
4. boundary treatment and particle management.

The hot path lives in numba kernels working on flat arrays. Fixed-state
fields are extended by ghost layers on both sides; ghosts carry frozen
far-field states, contribute noise and neighbor values, and only move.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from . import particle_field as pf
from .errors import (IllConditionedError, InsufficientNeighborhoodError, MismatchedFieldsError,
                     StabilityViolationError, StateBlowupError)
from .gas_model import GasModel, sound_speed, thermal_conductivity, viscosity
from .particle_field import ParticleField
from .statistics import domain_mean_density
from .stochastic_flux import MACCORMACK_CORRECTION, NoiseStream
from .wls_derivative import COND_MAX, DEFAULT_ALPHA, FASTMATH, ILL_CONDITIONED, INSUFFICIENT, stencil_weights

BLOWUP = 3
DEFAULT_SIGMA = 1.568e-12  # cm^2, system volume / length of the reference box

# columns of the per-step observable record produced by the chunked driver; the
# sums are of deviations from that step's first interior particle ("ref_*")
OBS_COLUMNS = ("M", "ref_rho", "sum_rho", "sum_rho2", "ref_J", "sum_J", "sum_J2",
               "ref_E", "sum_E", "sum_E2", "mode", "rho_mean", "rho_vol_mean")
N_OBS = len(OBS_COLUMNS)


@dataclass(frozen=True)
class SchemeConfig:
    dt: float = 1.0e-13
    noise_enabled: bool = True
    correction: float = MACCORMACK_CORRECTION
    stability_enforce: bool = False
    sigma: float = DEFAULT_SIGMA
    alpha: float = DEFAULT_ALPHA
    cond_max: float = COND_MAX
    gap_max: float = pf.GAP_MAX
    gap_min: float = pf.GAP_MIN

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


@dataclass
class StepDiagnostics:
    cfl_advective: float
    cfl_diffusive: float
    particles_added: int = 0
    particles_removed: int = 0


@dataclass
class FluxNoise:
    """Stochastic stress ``s`` and heat flux ``h_flux`` per particle."""

    s: np.ndarray
    h_flux: np.ndarray


def _gas_params(gas: GasModel):
    visc_pref = 5.0 / (16.0 * gas.d**2) * math.sqrt(gas.M * gas.kB / math.pi)
    kcond_pref = 15.0 * gas.kB / (4.0 * gas.M)
    return gas.R, gas.cv, gas.kB, visc_pref, kcond_pref


# ---------------------------------------------------------------------------
# kernels


@numba.njit(cache=True, error_model="numpy", fastmath=FASTMATH)
def _find_neighbors(x, i, periodic, L, hr, r_buf, j_buf):
    n = x.size
    cnt = 0
    if periodic:
        half = 0.5 * L
        for k in range(1, n):
            ii = i + k
            if ii >= n:
                j = ii - n
                r = x[j] - x[i] + L
            else:
                j = ii
                r = x[j] - x[i]
            if r > hr or r > half:
                break
            r_buf[cnt] = r
            j_buf[cnt] = j
            cnt += 1
        right = cnt
        for k in range(1, n - right):
            ii = i - k
            if ii < 0:
                j = ii + n
                r = x[j] - x[i] - L
            else:
                j = ii
                r = x[j] - x[i]
            if -r > hr or -r >= half:
                break
            r_buf[cnt] = r
            j_buf[cnt] = j
            cnt += 1
    else:
        j = i + 1
        while j < n and x[j] - x[i] <= hr:
            r_buf[cnt] = x[j] - x[i]
            j_buf[cnt] = j
            cnt += 1
            j += 1
        j = i - 1
        while j >= 0 and x[i] - x[j] <= hr:
            r_buf[cnt] = x[j] - x[i]
            j_buf[cnt] = j
            cnt += 1
            j -= 1
    return cnt


@numba.njit(cache=True, error_model="numpy", fastmath=FASTMATH)
def _cell_width(x, k, periodic, L):
    n = x.size
    if periodic:
        right = x[k + 1] - x[k] if k + 1 < n else x[0] + L - x[k]
        left = x[k] - x[k - 1] if k > 0 else x[k] - x[n - 1] + L
        return 0.5 * (left + right)
    if k == 0:
        return x[1] - x[0]
    if k == n - 1:
        return x[n - 1] - x[n - 2]
    return 0.5 * (x[k + 1] - x[k - 1])


@numba.njit(cache=True, error_model="numpy", fastmath=FASTMATH)
def _flux_noise(x, T, zs, zh, periodic, L, sigma, dt, corr, kB, visc_pref, kcond_pref, s, hf):
    for k in range(x.size):
        vc = sigma * _cell_width(x, k, periodic, L)
        eta = visc_pref * math.sqrt(T[k])
        kap = kcond_pref * eta
        s[k] = corr * math.sqrt(8.0 * kB * eta * T[k] / (3.0 * dt * vc)) * zs[k]
        hf[k] = corr * math.sqrt(2.0 * kB * kap * T[k] * T[k] / (dt * vc)) * zh[k]


@numba.njit(cache=True, error_model="numpy", fastmath=FASTMATH)
def _substep_kernel(x, rho, u, T, s, hf, lo, hi, periodic, L, h, hr, alpha, cond_max,
                    dt, R, cv, visc_pref, kcond_pref,
                    xo, rhoo, uo, To, P, eta, kap, r_buf, j_buf, c1, c2):
    """Forward-Euler update of particles ``lo..hi-1``; others only advect.

    Returns ``(status, index)``; status 0 on success.
    """
    n = x.size
    for k in range(n):
        P[k] = rho[k] * R * T[k]
        eta[k] = visc_pref * math.sqrt(T[k])
        kap[k] = kcond_pref * eta[k]
        xo[k] = x[k] + dt * u[k]
        rhoo[k] = rho[k]
        uo[k] = u[k]
        To[k] = T[k]
    f43 = 4.0 / 3.0
    for i in range(lo, hi):
        cnt = _find_neighbors(x, i, periodic, L, hr, r_buf, j_buf)
        status = stencil_weights(r_buf, cnt, h, alpha, cond_max, c1, c2)
        if status != 0:
            return status, i
        ux = 0.0
        uxx = 0.0
        Px = 0.0
        etax = 0.0
        Tx = 0.0
        Txx = 0.0
        kx = 0.0
        sx = 0.0
        hx = 0.0
        for m in range(cnt):
            j = j_buf[m]
            a = c1[m]
            b = c2[m]
            du = u[j] - u[i]
            dT = T[j] - T[i]
            ux += a * du
            uxx += b * du
            Tx += a * dT
            Txx += b * dT
            Px += a * (P[j] - P[i])
            etax += a * (eta[j] - eta[i])
            kx += a * (kap[j] - kap[i])
            sx += a * (s[j] - s[i])
            hx += a * (hf[j] - hf[i])
        r_i = rho[i]
        rhoo[i] = r_i - dt * r_i * ux
        uo[i] = u[i] + dt / r_i * (-Px + f43 * eta[i] * uxx + f43 * etax * ux + sx)
        To[i] = T[i] + dt / (cv * r_i) * (-P[i] * ux + f43 * eta[i] * ux * ux + kap[i] * Txx
                                           + kx * Tx + s[i] * ux + hx)
        if not (rhoo[i] > 0.0 and To[i] > 0.0 and math.isfinite(uo[i])
                and math.isfinite(rhoo[i]) and math.isfinite(To[i]) and math.isfinite(xo[i])):
            return BLOWUP, i
    return 0, -1


@numba.njit(cache=True, error_model="numpy", fastmath=FASTMATH)
def _step_kernel(x, rho, u, T, lo, hi, periodic, L, h, hr, alpha, cond_max,
                 dt, R, cv, kB, visc_pref, kcond_pref, sigma, corr, noise_on, z, z_off, w):
    """One full predictor/corrector/average step, in place.

    ``z[z_off:z_off + 4n]`` supplies the normals; ``w`` is a (16, n) work array.
    """
    n = x.size
    s = w[0]
    hf = w[1]
    xs = w[2]
    rs = w[3]
    us = w[4]
    Ts = w[5]
    xss = w[6]
    rss = w[7]
    uss = w[8]
    Tss = w[9]
    P = w[10]
    eta = w[11]
    kap = w[12]
    c1 = w[13]
    c2 = w[14]
    r_buf = w[15]
    j_buf = np.empty(n, np.int64)

    if noise_on:
        _flux_noise(x, T, z[z_off:z_off + n], z[z_off + n:z_off + 2 * n], periodic, L, sigma,
                    dt, corr, kB, visc_pref, kcond_pref, s, hf)
    else:
        s[:] = 0.0
        hf[:] = 0.0
    st, idx = _substep_kernel(x, rho, u, T, s, hf, lo, hi, periodic, L, h, hr, alpha, cond_max,
                              dt, R, cv, visc_pref, kcond_pref,
                              xs, rs, us, Ts, P, eta, kap, r_buf, j_buf, c1, c2)
    if st != 0:
        return st, idx
    if noise_on:
        _flux_noise(xs, Ts, z[z_off + 2 * n:z_off + 3 * n], z[z_off + 3 * n:z_off + 4 * n],
                    periodic, L, sigma, dt, corr, kB, visc_pref, kcond_pref, s, hf)
    st, idx = _substep_kernel(xs, rs, us, Ts, s, hf, lo, hi, periodic, L, h, hr, alpha, cond_max,
                              dt, R, cv, visc_pref, kcond_pref,
                              xss, rss, uss, Tss, P, eta, kap, r_buf, j_buf, c1, c2)
    if st != 0:
        return st, idx
    for k in range(n):
        x[k] = 0.5 * (x[k] + xss[k])
        rho[k] = 0.5 * (rho[k] + rss[k])
        u[k] = 0.5 * (u[k] + uss[k])
        T[k] = 0.5 * (T[k] + Tss[k])
    return 0, -1


@numba.njit(cache=True, error_model="numpy", fastmath=FASTMATH)
def _rotate_right(a):
    last = a[a.size - 1]
    for k in range(a.size - 1, 0, -1):
        a[k] = a[k - 1]
    a[0] = last


@numba.njit(cache=True, error_model="numpy", fastmath=FASTMATH)
def _rotate_left(a):
    first = a[0]
    for k in range(a.size - 1):
        a[k] = a[k + 1]
    a[a.size - 1] = first


@numba.njit(cache=True, error_model="numpy", fastmath=FASTMATH)
def _wrap_periodic(x, rho, u, T, x_min, L):
    n = x.size
    x_max = x_min + L
    for _ in range(n):
        if x[n - 1] >= x_max:
            x[n - 1] -= L
            _rotate_right(x)
            _rotate_right(rho)
            _rotate_right(u)
            _rotate_right(T)
        elif x[0] < x_min:
            x[0] += L
            _rotate_left(x)
            _rotate_left(rho)
            _rotate_left(u)
            _rotate_left(T)
        else:
            break


@numba.njit(cache=True, error_model="numpy", fastmath=FASTMATH)
def _observe(x, rho, u, T, lo, hi, periodic, L, x_min, cv, mode_k, bc, out):
    """``bc`` is (rho_left, rho_right, dx_left, dx_right), unused when periodic."""
    m = hi - lo
    r0 = rho[lo]
    j0 = r0 * u[lo]
    e0 = cv * r0 * T[lo] + 0.5 * r0 * u[lo] * u[lo]
    s_r = 0.0
    s_r2 = 0.0
    s_j = 0.0
    s_j2 = 0.0
    s_e = 0.0
    s_e2 = 0.0
    s_mode = 0.0
    s_vol = 0.0
    for i in range(lo, hi):
        r = rho[i]
        dr = r - r0
        dj = r * u[i] - j0
        de = cv * r * T[i] + 0.5 * r * u[i] * u[i] - e0
        s_r += dr
        s_r2 += dr * dr
        s_j += dj
        s_j2 += dj * dj
        s_e += de
        s_e2 += de * de
        s_mode += r * math.sin(mode_k * (x[i] - x_min))
        if periodic:
            s_vol += r * _cell_width(x, i, periodic, L)
    out[0] = m
    out[1] = r0
    out[2] = s_r
    out[3] = s_r2
    out[4] = j0
    out[5] = s_j
    out[6] = s_j2
    out[7] = e0
    out[8] = s_e
    out[9] = s_e2
    out[10] = s_mode / m
    out[11] = r0 + s_r / m
    if periodic:
        out[12] = s_vol / L
    else:
        out[12] = domain_mean_density(x[lo:hi], rho[lo:hi], x_min, L, bc[0], bc[1], bc[2], bc[3])


@numba.njit(cache=True, error_model="numpy", fastmath=FASTMATH)
def _needs_event(x, lo, hi, periodic, x_min, L, dx0, gap_max, gap_min, dx_left, dx_right):
    lo_gap = gap_min * dx0
    hi_gap = gap_max * dx0
    for i in range(lo, hi - 1):
        g = x[i + 1] - x[i]
        if g < lo_gap or g > hi_gap:
            return True
    if periodic:
        g = x[lo] + L - x[hi - 1]
        return g < lo_gap or g > hi_gap
    x_max = x_min + L
    if x[lo] < x_min or x[hi - 1] > x_max:
        return True
    if x[lo] - x_min >= dx_left or x_max - x[hi - 1] >= dx_right:
        return True
    return False


@numba.njit(cache=True, error_model="numpy", fastmath=FASTMATH)
def _advance_kernel(x, rho, u, T, lo, hi, periodic, L, x_min, h, hr, alpha, cond_max,
                    dt, R, cv, kB, visc_pref, kcond_pref, sigma, corr, noise_on,
                    z, z_off, n_steps, dx0, gap_max, gap_min, dx_left, dx_right, mode_k, bc, obs):
    """Run up to ``n_steps`` steps, stopping after any step that needs Python-side
    boundary or particle management.

    Returns ``(steps_done, z_off, status, index, event)``.
    """
    n = x.size
    w = np.empty((16, n))
    for k in range(n_steps):
        st, idx = _step_kernel(x, rho, u, T, lo, hi, periodic, L, h, hr, alpha, cond_max,
                               dt, R, cv, kB, visc_pref, kcond_pref, sigma, corr, noise_on,
                               z, z_off, w)
        if noise_on:
            z_off += 4 * n
        if st != 0:
            return k, z_off, st, idx, False
        if periodic:
            _wrap_periodic(x, rho, u, T, x_min, L)
        _observe(x, rho, u, T, lo, hi, periodic, L, x_min, cv, mode_k, bc, obs[k])
        if _needs_event(x, lo, hi, periodic, x_min, L, dx0, gap_max, gap_min, dx_left, dx_right):
            return k + 1, z_off, 0, -1, True
    return n_steps, z_off, 0, -1, False


# ---------------------------------------------------------------------------
# python-level operations


def _extended(field: ParticleField):
    """Flat arrays including ghosts, plus the interior index range."""
    if field.periodic:
        return field.x.copy(), field.rho.copy(), field.u.copy(), field.T.copy(), 0, len(field)
    gx, grho, gu, gT, nl = pf.ghost_layers(field)
    x = np.concatenate([gx[:nl], field.x, gx[nl:]])
    rho = np.concatenate([grho[:nl], field.rho, grho[nl:]])
    u = np.concatenate([gu[:nl], field.u, gu[nl:]])
    T = np.concatenate([gT[:nl], field.T, gT[nl:]])
    return x, rho, u, T, nl, nl + len(field)


def _raise_status(status, index, step=None):
    if status == INSUFFICIENT:
        raise InsufficientNeighborhoodError(f"fewer than 2 neighbors at particle {index}")
    if status == ILL_CONDITIONED:
        raise IllConditionedError(f"ill-conditioned stencil at particle {index}")
    if status == BLOWUP:
        raise StateBlowupError(f"non-physical state at particle {index} (step {step})",
                               step=step, index=index)


def substep(field: ParticleField, gas: GasModel, cfg: SchemeConfig, noise: FluxNoise) -> ParticleField:
    """Single forward-Euler stage with the given per-particle noise.

    Ghost particles of a fixed-state field carry zero noise here.
    """
    s = np.asarray(noise.s, dtype=float)
    hfl = np.asarray(noise.h_flux, dtype=float)
    if s.shape != field.x.shape or hfl.shape != field.x.shape:
        raise ValueError("noise arrays must align with the particles")
    x, rho, u, T, lo, hi = _extended(field)
    n = x.size
    s_ext = np.zeros(n)
    h_ext = np.zeros(n)
    s_ext[lo:hi] = s
    h_ext[lo:hi] = hfl
    R, cv, kB, vp, kp = _gas_params(gas)
    out = np.empty((4, n))
    tmp = np.empty((5, n))
    j_buf = np.empty(n, np.int64)
    st, idx = _substep_kernel(x, rho, u, T, s_ext, h_ext, lo, hi, field.periodic, field.length,
                              field.h, field.h * (1 + pf.RADIUS_SLACK), cfg.alpha, cfg.cond_max,
                              cfg.dt, R, cv, vp, kp, out[0], out[1], out[2], out[3],
                              tmp[0], tmp[1], tmp[2], tmp[3], j_buf, tmp[4], np.empty(n))
    _raise_status(st, idx)
    return ParticleField(x=out[0, lo:hi], rho=out[1, lo:hi], u=out[2, lo:hi], T=out[3, lo:hi],
                         domain=field.domain, boundary=field.boundary, dx0=field.dx0, h=field.h,
                         ids=field.ids.copy())


def average_final(field_m: ParticleField, field_ss: ParticleField) -> ParticleField:
    if len(field_m) != len(field_ss):
        raise MismatchedFieldsError(f"{len(field_m)} vs {len(field_ss)} particles")
    out = field_m.copy()
    out.x = 0.5 * (field_m.x + field_ss.x)
    out.rho = 0.5 * (field_m.rho + field_ss.rho)
    out.u = 0.5 * (field_m.u + field_ss.u)
    out.T = 0.5 * (field_m.T + field_ss.T)
    return out


def check_stability(field: ParticleField, gas: GasModel, cfg: SchemeConfig):
    """Advective and diffusive stability ratios using local maxima and the
    smallest particle spacing."""
    g = pf._gaps(field)
    dx = float(g.min())
    adv = float(np.max(np.abs(field.u) + sound_speed(field.T, gas))) * cfg.dt / dx
    eta = viscosity(field.T, gas)
    kap = thermal_conductivity(eta, gas)
    diff_coef = np.maximum(4.0 / 3.0 * eta / field.rho, kap / (field.rho * gas.cv))
    diff = float(np.max(diff_coef)) * cfg.dt / dx**2
    return adv, diff


def _enforce(adv, diff):
    if adv > 1.0 or diff > 0.5:
        raise StabilityViolationError(f"advective ratio {adv:.3g}, diffusive ratio {diff:.3g}")


def _finish(field, x, rho, u, T, lo, hi, cfg):
    new = ParticleField(x=x[lo:hi], rho=rho[lo:hi], u=u[lo:hi], T=T[lo:hi], domain=field.domain,
                        boundary=field.boundary, dx0=field.dx0, h=field.h, ids=field.ids.copy())
    new, a1, r1 = pf.apply_boundary(new)
    new, a2, r2 = pf.manage_particles(new, cfg.gap_max, cfg.gap_min)
    return new, a1 + a2, r1 + r2


def step(field: ParticleField, gas: GasModel, cfg: SchemeConfig, stream: NoiseStream | None):
    """Advance one full step. Returns ``(new_field, StepDiagnostics)``."""
    adv, diff = check_stability(field, gas, cfg)
    if cfg.stability_enforce:
        _enforce(adv, diff)
    x, rho, u, T, lo, hi = _extended(field)
    n = x.size
    noise_on = cfg.noise_enabled and stream is not None
    z = stream.normal(4 * n) if noise_on else np.empty(0)
    R, cv, kB, vp, kp = _gas_params(gas)
    st, idx = _step_kernel(x, rho, u, T, lo, hi, field.periodic, field.length, field.h,
                           field.h * (1 + pf.RADIUS_SLACK), cfg.alpha, cfg.cond_max, cfg.dt, R, cv,
                           kB, vp, kp, cfg.sigma, cfg.correction, noise_on, z, 0, np.empty((16, n)))
    _raise_status(st, idx)
    new, added, removed = _finish(field, x, rho, u, T, lo, hi, cfg)
    return new, StepDiagnostics(adv, diff, added, removed)


@dataclass
class RunTotals:
    steps: int = 0
    particles_added: int = 0
    particles_removed: int = 0
    events: int = 0
    max_cfl_advective: float = 0.0
    max_cfl_diffusive: float = 0.0


class Integrator:
    """Chunked driver: many steps per kernel call, Python only at events.

    Consumes normals from ``stream`` in the same order as repeated ``step``
    calls, so both paths give the same trajectory for the same seed.
    """

    def __init__(self, field: ParticleField, gas: GasModel, cfg: SchemeConfig,
                 stream: NoiseStream | None, mode_n: int = 1, chunk: int = 4096):
        self.field = field
        self.gas = gas
        self.cfg = cfg
        self.stream = stream
        self.noise_on = cfg.noise_enabled and stream is not None
        self.mode_k = 2.0 * math.pi * mode_n / field.length
        self.chunk = chunk
        self.totals = RunTotals()
        self._z = np.empty(0)
        self._z_off = 0
        self._load()

    def _load(self):
        self._x, self._rho, self._u, self._T, self._lo, self._hi = _extended(self.field)
        adv, diff = check_stability(self.field, self.gas, self.cfg)
        t = self.totals
        t.max_cfl_advective = max(t.max_cfl_advective, adv)
        t.max_cfl_diffusive = max(t.max_cfl_diffusive, diff)
        if self.cfg.stability_enforce:
            _enforce(adv, diff)

    def _ensure_noise(self, n_steps):
        need = 4 * self._x.size * n_steps
        left = self._z.size - self._z_off
        if left < need:
            fresh = self.stream.normal(need - left + 4 * self._x.size * self.chunk)
            self._z = np.concatenate([self._z[self._z_off:], fresh])
            self._z_off = 0

    def advance(self, n_steps: int) -> np.ndarray:
        """Run ``n_steps`` steps; returns the (n_steps, N_OBS) observable record."""
        obs = np.empty((n_steps, N_OBS))
        done = 0
        cfg, f = self.cfg, self.field
        R, cv, kB, vp, kp = _gas_params(self.gas)
        bc = f.boundary
        dxl = getattr(bc, "dx_left", 0.0)
        dxr = getattr(bc, "dx_right", 0.0)
        bc_arr = np.zeros(4) if f.periodic else np.array([bc.left.rho, bc.right.rho, dxl, dxr])
        while done < n_steps:
            todo = min(self.chunk, n_steps - done)
            if self.noise_on:
                self._ensure_noise(todo)
            z = self._z if self.noise_on else np.empty(0)
            k, z_off, st, idx, event = _advance_kernel(
                self._x, self._rho, self._u, self._T, self._lo, self._hi, f.periodic, f.length,
                f.domain[0], f.h, f.h * (1 + pf.RADIUS_SLACK), cfg.alpha, cfg.cond_max, cfg.dt,
                R, cv, kB, vp, kp, cfg.sigma, cfg.correction, self.noise_on, z, self._z_off,
                todo, f.dx0, cfg.gap_max, cfg.gap_min, dxl, dxr, self.mode_k, bc_arr, obs[done:done + todo])
            self._z_off = z_off
            self.totals.steps += k
            if st != 0:
                _raise_status(st, idx, step=self.totals.steps + 1)
            done += k
            if event or not f.periodic:
                self._event()
        return obs

    def sync(self) -> ParticleField:
        """Current interior field (ghosts stripped)."""
        lo, hi = self._lo, self._hi
        f = self.field
        self.field = ParticleField(x=self._x[lo:hi].copy(), rho=self._rho[lo:hi].copy(),
                                   u=self._u[lo:hi].copy(), T=self._T[lo:hi].copy(),
                                   domain=f.domain, boundary=f.boundary, dx0=f.dx0, h=f.h)
        return self.field

    def _event(self):
        f = self.sync()
        f, a1, r1 = pf.apply_boundary(f)
        f, a2, r2 = pf.manage_particles(f, self.cfg.gap_max, self.cfg.gap_min)
        t = self.totals
        t.particles_added += a1 + a2
        t.particles_removed += r1 + r2
        t.events += 1
        self.field = f
        self._load()
