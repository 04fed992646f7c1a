"""Weighted least-squares (finite pointset) first and second derivatives in 1D.

Around an evaluation point ``x`` the neighbor values are fitted with the
truncated Taylor polynomial ``f_i - f(x) = fx*r_i + fxx*r_i**2/2`` where
``r_i = x_i - x``, weighted by a compactly supported Gaussian. The 2x2
normal equations are assembled in offsets scaled by ``h`` so that the
conditioning test measures geometry and not units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import IllConditionedError, InsufficientNeighborhoodError

DEFAULT_ALPHA = 6.25
# no nnan/ninf: blowup detection relies on isfinite
FASTMATH = {"nsz", "arcp", "contract", "afn", "reassoc"}
COND_MAX = 1.0e12

OK = 0
INSUFFICIENT = 1
ILL_CONDITIONED = 2


@dataclass(frozen=True)
class WlsConfig:
    h: float
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not (self.alpha > 0 and self.h > 0):
            raise ValueError("alpha and h must be positive")


@dataclass(frozen=True)
class DerivativePair:
    fx: float
    fxx: float


def weight(xi, x, cfg: WlsConfig):
    """Gaussian weight with support radius ``cfg.h``; zero outside."""
    q = np.abs(np.asarray(xi, dtype=float) - x) / cfg.h
    w = np.where(q <= 1.0, np.exp(-cfg.alpha * q * q), 0.0)
    return float(w) if w.ndim == 0 else w


@numba.njit(cache=True, error_model="numpy", fastmath=FASTMATH)
def stencil_weights(r, n, h, alpha, cond_max, c1, c2):
    """Fill ``c1[:n]``, ``c2[:n]`` so that ``fx = sum(c1*b)``, ``fxx = sum(c2*b)``.

    ``r`` holds neighbor offsets ``x_j - x`` (all assumed within ``h``);
    ``c1`` doubles as scratch for the weights. Returns a status code
    (OK, INSUFFICIENT or ILL_CONDITIONED).
    """
    if n < 2:
        return INSUFFICIENT
    a11 = 0.0
    a12 = 0.0
    a22 = 0.0
    for j in range(n):
        q = r[j] / h
        w = math.exp(-alpha * q * q)
        c1[j] = w
        q2 = 0.5 * q * q
        a11 += w * q * q
        a12 += w * q * q2
        a22 += w * q2 * q2
    det = a11 * a22 - a12 * a12
    half_tr = 0.5 * (a11 + a22)
    disc = math.sqrt(max(half_tr * half_tr - det, 0.0))
    lam_min = half_tr - disc
    lam_max = half_tr + disc
    if det <= 0.0 or lam_min <= 0.0 or lam_max > cond_max * lam_min:
        return ILL_CONDITIONED
    g1 = 1.0 / (det * h)
    g2 = 1.0 / (det * h * h)
    for j in range(n):
        q = r[j] / h
        w = c1[j]
        q2 = 0.5 * q * q
        c1[j] = w * (a22 * q - a12 * q2) * g1
        c2[j] = w * (a11 * q2 - a12 * q) * g2
    return OK


def derivatives(xs, fs, at: float, f_at: float, cfg: WlsConfig, cond_max: float = COND_MAX) -> DerivativePair:
    """Estimate ``(f_x, f_xx)`` at ``at`` from neighbor samples ``(xs, fs)``.

    Neighbors beyond ``cfg.h`` get zero weight and are dropped. Raises
    InsufficientNeighborhoodError for fewer than two in-support neighbors
    and IllConditionedError for degenerate geometry.
    """
    xs = np.asarray(xs, dtype=float)
    fs = np.asarray(fs, dtype=float)
    r = xs - at
    keep = np.abs(r) <= cfg.h
    r = np.ascontiguousarray(r[keep])
    b = fs[keep] - f_at
    n = r.size
    if n < 2:
        raise InsufficientNeighborhoodError(f"{n} neighbor(s) within h={cfg.h:g} of x={at:g}")
    c1 = np.empty(n)
    c2 = np.empty(n)
    status = stencil_weights(r, n, cfg.h, cfg.alpha, cond_max, c1, c2)
    if status == ILL_CONDITIONED:
        raise IllConditionedError(f"degenerate neighbor geometry at x={at:g}")
    return DerivativePair(fx=float(c1 @ b), fxx=float(c2 @ b))
