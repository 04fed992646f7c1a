import math

import numpy as np
import pytest

from meshfree_llns import stochastic_flux as sf
from meshfree_llns.errors import DegenerateFieldError
from meshfree_llns.gas_model import ARGON, BOLTZMANN, thermal_conductivity, viscosity

SIGMA = 1.568e-12
DT = 1e-13


def test_cell_volume_uniform_reference():
    x = (np.arange(40) + 0.5) * 3.125e-6
    V = sf.local_cell_volume(x, SIGMA, periodic_length=1.25e-4)
    assert np.allclose(V, 4.9e-18, rtol=1e-15)


def test_cell_volume_nonperiodic_ends():
    V = sf.local_cell_volume([0.0, 1.0, 3.0, 6.0], 2.0)
    assert np.allclose(V, [2.0, 3.0, 5.0, 6.0])
    with pytest.raises(DegenerateFieldError):
        sf.local_cell_volume([1.0], 1.0)
    with pytest.raises(DegenerateFieldError):
        sf.local_cell_volume([0.0, 0.0, 1.0], 1.0)


def test_amplitude_formulas():
    eta = float(viscosity(273.0, ARGON))
    kappa = float(thermal_conductivity(eta, ARGON))
    Vc = 4.9e-18
    a = sf.stress_amplitude(eta, 273.0, DT, Vc)
    b = sf.heat_flux_amplitude(kappa, 273.0, DT, Vc)
    assert a**2 == pytest.approx(8 * BOLTZMANN * eta * 273.0 / (3 * DT * Vc), rel=1e-14)
    assert b**2 == pytest.approx(2 * BOLTZMANN * kappa * 273.0**2 / (DT * Vc), rel=1e-14)
    assert sf.stress_amplitude(eta, 273.0, DT, Vc, sf.MACCORMACK_CORRECTION) ** 2 == pytest.approx(2 * a**2)


@pytest.mark.parametrize("which", ["stress", "heat"])
def test_sample_variance_calibration(which):
    eta = float(viscosity(273.0, ARGON))
    kappa = float(thermal_conductivity(eta, ARGON))
    Vc = np.full(10_000_000, 4.9e-18)
    stream = sf.NoiseStream(7, 1 if which == "stress" else 2)
    if which == "stress":
        s = sf.sample_stress(eta, 273.0, DT, Vc, sf.MACCORMACK_CORRECTION, stream)
        target = 2 * 8 * BOLTZMANN * eta * 273.0 / (3 * DT * 4.9e-18)
    else:
        s = sf.sample_heat_flux(kappa, 273.0, DT, Vc, sf.MACCORMACK_CORRECTION, stream)
        target = 2 * 2 * BOLTZMANN * kappa * 273.0**2 / (DT * 4.9e-18)
    assert abs(np.var(s) / target - 1) < 0.01
    sd = math.sqrt(target)
    assert abs(np.mean(s)) < 5 * sd / math.sqrt(s.size)
    z = s[:1_000_000] / sd
    assert abs(np.mean(z**4) / np.var(z) ** 2 - 3) < 0.05


def test_stress_and_heat_streams_uncorrelated():
    a = sf.NoiseStream(11, 0).normal(1_000_000)
    b = sf.NoiseStream(11, 1).normal(1_000_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 5e-3
    assert abs(np.corrcoef(a[:-1], a[1:])[0, 1]) < 5e-3


def test_stream_reproducible_and_batch_independent():
    a = sf.NoiseStream(3, 5).normal(1000)
    s = sf.NoiseStream(3, 5)
    b = np.concatenate([s.normal(10), s.normal(990)])
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sf.NoiseStream(3, 6).normal(1000))


def test_two_step_variance_independent_is_half():
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal((2, 10_000_000))
    assert abs(sf.two_step_variance_check(a, b) - 0.5) < 0.01


def test_two_step_variance_edge_cases():
    a = np.random.default_rng(1).standard_normal(100_000)
    assert sf.two_step_variance_check(a, a) == pytest.approx(1.0)
    assert sf.two_step_variance_check(a, np.zeros_like(a)) == pytest.approx(0.25)
