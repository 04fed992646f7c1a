"""Dilute monatomic hard-sphere gas: equation of state and transport coefficients.

All quantities are CGS. Functions accept scalars or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BOLTZMANN = 1.380649e-16  # erg/K, CODATA
ARGON_DIAMETER = 3.66e-8  # cm
ARGON_MASS = 6.63e-23  # g


@dataclass(frozen=True)
class GasModel:
    """Gas constants. ``R`` and ``cv`` are derived and never set directly.

    gamma defaults to 5/3 (monatomic); it is the only value that reproduces
    the reference Argon sound speed of 30781 cm/s at 273 K.
    """

    d: float = ARGON_DIAMETER
    M: float = ARGON_MASS
    kB: float = BOLTZMANN
    gamma: float = 5.0 / 3.0
    R: float = field(init=False)
    cv: float = field(init=False)

    def __post_init__(self):
        if not (self.d > 0 and self.M > 0 and self.kB > 0):
            raise ValueError("d, M and kB must be positive")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        R = self.kB / self.M
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "cv", R / (self.gamma - 1.0))


ARGON = GasModel()


@dataclass(frozen=True)
class PrimitiveState:
    rho: float
    u: float
    T: float

    def is_valid(self) -> bool:
        return self.rho > 0 and self.T > 0 and math.isfinite(self.u)


@dataclass(frozen=True)
class ConservedState:
    rho: float
    J: float
    E: float


def pressure(rho, T, gas: GasModel = ARGON):
    return rho * gas.R * T


def viscosity(T, gas: GasModel = ARGON):
    """Hard-sphere shear viscosity, scales as sqrt(T)."""
    return 5.0 / (16.0 * gas.d**2) * np.sqrt(gas.M * gas.kB * T / math.pi)


def thermal_conductivity(eta, gas: GasModel = ARGON):
    return 15.0 * gas.kB * eta / (4.0 * gas.M)


def sound_speed(T, gas: GasModel = ARGON):
    return np.sqrt(gas.gamma * gas.R * T)


def conserved_from_primitive(state: PrimitiveState, gas: GasModel = ARGON) -> ConservedState:
    rho, u, T = state.rho, state.u, state.T
    return ConservedState(rho=rho, J=rho * u, E=gas.cv * rho * T + 0.5 * rho * u * u)


def primitive_from_conserved(cons: ConservedState, gas: GasModel = ARGON) -> PrimitiveState:
    rho = cons.rho
    u = cons.J / rho
    T = (cons.E - 0.5 * cons.J * cons.J / rho) / (gas.cv * rho)
    return PrimitiveState(rho=rho, u=u, T=T)


def momentum_energy(rho, u, T, gas: GasModel = ARGON):
    """Array form of the conserved map, returns ``(J, E)``."""
    J = rho * u
    return J, gas.cv * rho * T + 0.5 * rho * u * u
