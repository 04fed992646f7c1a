"""Linear-theory equilibrium variance of the collocated WLS discretization.

For a uniform periodic lattice the noise enters each mode through the
first-derivative stencil (symbol B(k)) and is damped through the
second-derivative stencil (symbol A(k)). The stationary variance of mode k
relative to its fluctuation-dissipation value is |B(k)|^2 / A(k); exact
derivatives would give k^2 / k^2 = 1. Averaging over the resolved modes gives
the fraction of the reference variance the scheme can reach.

    python3 scripts/variance_theory.py [N]
"""
import sys

import numpy as np

from meshfree_llns.experiments import REFERENCE_VARIANCE
from meshfree_llns.particle_field import H_FACTOR
from meshfree_llns.wls_derivative import COND_MAX, DEFAULT_ALPHA, stencil_weights


def mode_ratio(n_particles: int, h_factor: float = H_FACTOR, alpha: float = DEFAULT_ALPHA):
    reach = int(np.floor(h_factor))
    r = np.array([m for m in range(-reach, reach + 1) if m != 0], dtype=float)
    c1 = np.empty(r.size)
    c2 = np.empty(r.size)
    stencil_weights(r, r.size, h_factor, alpha, COND_MAX, c1, c2)
    k = 2 * np.pi * np.arange(1, n_particles) / n_particles
    phase = np.exp(1j * np.outer(k, r))
    B = phase @ c1
    A = -((phase - 1) @ c2).real
    return k, np.abs(B) ** 2 / A


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 40
    k, ratio = mode_ratio(n)
    mean = float(ratio.mean())
    print(f"N={n}: mode-averaged variance ratio {mean:.4f} (max over modes {ratio.max():.4f})")
    for scenario, ref in REFERENCE_VARIANCE.items():
        pred = ", ".join(f"{q} {mean * v:.3g} (ref {v:.3g})" for q, v in ref.items())
        print(f"  {scenario}: predicted {pred}")


if __name__ == "__main__":
    main()
