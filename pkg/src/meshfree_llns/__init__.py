"""Meshfree Lagrangian particle solver for 1D fluctuating hydrodynamics."""
from .gas_model import ARGON, GasModel, PrimitiveState
from .particle_field import ParticleField, init_uniform
from .maccormack import Integrator, SchemeConfig, step
from .stochastic_flux import NoiseStream

__all__ = ["ARGON", "GasModel", "PrimitiveState", "ParticleField", "init_uniform", "Integrator",
           "SchemeConfig", "step", "NoiseStream"]
