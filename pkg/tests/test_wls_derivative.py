import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from meshfree_llns.errors import IllConditionedError, InsufficientNeighborhoodError
from meshfree_llns.wls_derivative import WlsConfig, derivatives, weight

CFG = WlsConfig(h=3.0)


def lstsq_oracle(xs, fs, x, f, h, alpha=6.25):
    """Dense weighted least squares through numpy, independent of the 2x2 closed form."""
    r = np.asarray(xs) - x
    w = np.where(np.abs(r) <= h, np.exp(-alpha * (r / h) ** 2), 0.0)
    A = np.column_stack([r, 0.5 * r * r]) * np.sqrt(w)[:, None]
    b = (np.asarray(fs) - f) * np.sqrt(w)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol


def test_weight_values():
    assert weight(1.0, 1.0, CFG) == 1.0
    assert weight(1.0 + 1.01 * 3.0, 1.0, CFG) == 0.0
    assert weight(1.5, 0.0, CFG) == pytest.approx(math.exp(-1.5625), rel=1e-15)
    assert weight(1.5, 0.0, CFG) == pytest.approx(0.2096, abs=5e-5)
    assert weight(3.0, 0.0, CFG) == pytest.approx(math.exp(-6.25))


def test_config_validation():
    with pytest.raises(ValueError):
        WlsConfig(h=0.0)
    with pytest.raises(ValueError):
        WlsConfig(h=1.0, alpha=-1.0)


def test_constant_function():
    xs = np.array([-3, -2, -1, 1, 2, 3.0])
    d = derivatives(xs, np.full(6, 7.5), 0.0, 7.5, CFG)
    assert d.fx == 0.0 and d.fxx == 0.0


@pytest.mark.parametrize("xs", [[-1.0, 1.0], [1.0, 2.0], [-2.5, 0.3, 1.1, 2.9], [-3, -2, -1, 1, 2, 3]])
def test_linear_function(xs):
    xs = np.asarray(xs, dtype=float) + 10.0
    d = derivatives(xs, 3 * xs + 1, 10.0, 31.0, CFG)
    assert d.fx == pytest.approx(3.0, rel=1e-12)
    assert abs(d.fxx) < 1e-12


def test_quadratic_symmetric_stencil():
    x, dx = 0.7, 0.4
    xs = x + dx * np.array([-3, -2, -1, 1, 2, 3.0])
    cfg = WlsConfig(h=3 * dx)
    d = derivatives(xs, xs**2, x, x**2, cfg)
    ref = lstsq_oracle(xs, xs**2, x, x**2, cfg.h)
    assert d.fx == pytest.approx(2 * x, rel=1e-12)
    assert d.fxx == pytest.approx(2.0, rel=1e-12)
    assert np.allclose([d.fx, d.fxx], ref, rtol=1e-12)


def test_insufficient_neighbors():
    with pytest.raises(InsufficientNeighborhoodError):
        derivatives([1.0], [1.0], 0.0, 0.0, CFG)
    with pytest.raises(InsufficientNeighborhoodError):
        derivatives([1.0, 5.0], [1.0, 1.0], 0.0, 0.0, CFG)


def test_ill_conditioned_coincident_points():
    with pytest.raises(IllConditionedError):
        derivatives([1.0, 1.0, 1.0], [1.0, 2.0, 3.0], 0.0, 0.0, CFG)


offsets = st.lists(st.floats(-1.0, 1.0).filter(lambda v: abs(v) > 0.05), min_size=2, max_size=12)


@settings(max_examples=300, deadline=None)
@given(offsets, st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-100, 100))
def test_quadratic_reproduction(offs, a, b, c, x):
    offs = np.asarray(offs)
    assume(np.ptp(offs) > 0.05)
    h = 1.0
    xs = x + offs * h
    f = lambda t: a + b * (t - x) + c * (t - x) ** 2
    d = derivatives(xs, f(xs), x, f(x), WlsConfig(h=h))
    scale = abs(b) + abs(c) + 1.0
    assert abs(d.fx - b) <= 1e-10 * scale
    assert abs(d.fxx - 2 * c) <= 1e-9 * scale


@settings(max_examples=200, deadline=None)
@given(offsets, st.floats(-1e3, 1e3))
def test_translation_invariance(offs, shift):
    offs = np.asarray(offs)
    assume(np.ptp(offs) > 0.05)
    fs = np.sin(3 * offs) + offs**3
    d0 = derivatives(offs, fs, 0.0, 0.0, WlsConfig(h=1.0))
    d1 = derivatives(offs + shift, fs, shift, 0.0, WlsConfig(h=1.0))
    assert d1.fx == pytest.approx(d0.fx, rel=1e-9, abs=1e-9)
    assert d1.fxx == pytest.approx(d0.fxx, rel=1e-9, abs=1e-9)


def test_agrees_with_dense_solver_on_random_instances(rng):
    worst = 0.0
    for _ in range(1000):
        n = rng.integers(2, 15)
        h = 10 ** rng.uniform(-7, 1)
        x = rng.uniform(-1, 1)
        offs = rng.uniform(-1, 1, n) * h
        if np.ptp(offs) < 0.1 * h or np.min(np.abs(offs)) < 1e-3 * h:
            continue
        fs = rng.normal(size=n)
        f0 = rng.normal()
        d = derivatives(x + offs, fs, x, f0, WlsConfig(h=h))
        ref = lstsq_oracle(x + offs, fs, x, f0, h)
        rel = np.abs(np.array([d.fx, d.fxx]) - ref) / np.maximum(np.abs(ref), 1e-300)
        worst = max(worst, rel.max())
    assert worst < 1e-10


def test_second_order_convergence_of_first_derivative():
    def max_err(dx):
        xs = np.arange(0, 2 * np.pi, dx)
        cfg = WlsConfig(h=3 * dx)
        errs = []
        for i in range(3, xs.size - 3):
            nb = np.r_[i - 3:i, i + 1:i + 4]
            d = derivatives(xs[nb], np.sin(xs[nb]), xs[i], np.sin(xs[i]), cfg)
            errs.append(abs(d.fx - np.cos(xs[i])))
        return max(errs)

    ratio = max_err(0.1) / max_err(0.05)
    assert ratio == pytest.approx(4.0, rel=0.2)
