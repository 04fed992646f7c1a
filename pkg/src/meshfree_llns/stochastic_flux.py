"""Stochastic stress and heat flux with fluctuation-dissipation amplitudes.

Per particle and sub-step,

    s = c * sqrt(8 kB eta T / (3 dt Vc)) * Z1
    h = c * sqrt(2 kB kappa T^2 / (dt Vc)) * Z2

with Z1, Z2 independent standard normals. A two-stage scheme that averages
the old and twice-advanced states halves the variance of the flux that
enters the update, so ``c = sqrt(2)`` there and ``c = 1`` for one-stage
schemes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFieldError
from .gas_model import BOLTZMANN

MACCORMACK_CORRECTION = math.sqrt(2.0)


@dataclass
class NoiseStream:
    """Reproducible Gaussian source keyed by ``(seed, stream_id)``.

    Philox is counter based, so the k-th variate of a stream depends only on
    the key and k, never on how the draws were batched.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        self._gen = np.random.Generator(np.random.Philox(ss))

    def normal(self, size=None) -> np.ndarray:
        return self._gen.standard_normal(size)


def local_cell_volume(x, sigma: float, periodic_length: float | None = None) -> np.ndarray:
    """Per-particle control volume ``sigma * (x[i+1] - x[i-1]) / 2``.

    End particles of a non-periodic set use their single adjacent gap.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise DegenerateFieldError("need at least two particles for a cell volume")
    if periodic_length is not None:
        right = np.roll(x, -1) - x
        right[-1] += periodic_length
        left = x - np.roll(x, 1)
        left[0] += periodic_length
        width = 0.5 * (left + right)
    else:
        g = np.diff(x)
        width = np.empty_like(x)
        width[1:-1] = 0.5 * (g[:-1] + g[1:])
        width[0] = g[0]
        width[-1] = g[-1]
    if np.any(width <= 0):
        raise DegenerateFieldError("non-positive particle spacing")
    return sigma * width


def stress_amplitude(eta, T, dt, Vc, correction=1.0, kB=BOLTZMANN):
    return correction * np.sqrt(8.0 * kB * eta * T / (3.0 * dt * Vc))


def heat_flux_amplitude(kappa, T, dt, Vc, correction=1.0, kB=BOLTZMANN):
    return correction * np.sqrt(2.0 * kB * kappa * T * T / (dt * Vc))


def sample_stress(eta, T, dt, Vc, correction, stream: NoiseStream, kB=BOLTZMANN):
    amp = stress_amplitude(eta, T, dt, Vc, correction, kB)
    return amp * stream.normal(np.shape(amp))


def sample_heat_flux(kappa, T, dt, Vc, correction, stream: NoiseStream, kB=BOLTZMANN):
    amp = heat_flux_amplitude(kappa, T, dt, Vc, correction, kB)
    return amp * stream.normal(np.shape(amp))


def two_step_variance_check(samples_m, samples_star) -> float:
    """``Var((s_m + s_star)/2) / Var(s_m)``; one half for independent inputs."""
    a = np.asarray(samples_m, dtype=float)
    b = np.asarray(samples_star, dtype=float)
    return float(np.var(0.5 * a + 0.5 * b) / np.var(a))
