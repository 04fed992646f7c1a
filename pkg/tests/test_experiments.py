import dataclasses
import math

import numpy as np
import pytest

from meshfree_llns import cli
from meshfree_llns import experiments as ex
from meshfree_llns.errors import InvalidConfigError, MeshfreeError
from meshfree_llns.gas_model import ARGON


def test_equilibrium_preset_values():
    c = ex.preset("table1-equilibrium")
    assert (c.L, c.N, c.dt) == (1.25e-4, 40, 1e-13)
    assert (c.rho0, c.T0, c.sigma) == (1.78e-3, 273.0, 1.568e-12)
    assert c.n_skip == 10_000 and c.n_steps == 1_000_000


def test_netflow_preset_velocity():
    c = ex.preset("table1-netflow")
    assert c.net_flow_velocity == pytest.approx(0.5 * 30781)


def test_shock_preset_values():
    c = ex.preset("table4-shock-mach2")
    assert c.L == 5.0e-4 and c.rho0 == 1.78e-3 and c.mach == 2.0
    f, left, right = ex.shock_field(c, c.gas())
    assert right.u == pytest.approx(-61562, rel=5e-4)
    assert left.rho == pytest.approx(4.07e-3, rel=5e-3)
    assert f.is_sorted()
    # equal mass per particle on both sides
    m = f.rho * np.gradient(f.x)
    assert np.allclose(m[2:-2], m[2], rtol=1e-9)
    with pytest.raises(InvalidConfigError):
        ex.preset("nope")


def test_shock_without_mach_rejected():
    with pytest.raises(InvalidConfigError, match="mach"):
        ex.parse_config("scenario = standing_shock\nmach = 0\n")
    with pytest.raises(InvalidConfigError, match="mach"):
        ex.ExperimentConfig(scenario="standing_shock").validate()


def test_validation_lists_every_violation():
    with pytest.raises(InvalidConfigError) as e:
        ex.ExperimentConfig(L=-1.0, N=2, dt=0.0).validate()
    msg = str(e.value)
    assert "L must be positive" in msg and "N must be at least 4" in msg and "dt must be positive" in msg


@pytest.mark.parametrize("text, line", [
    ("N = 40\nL 1.0\n", 2),
    ("# comment\n\nfoo = 3\n", 3),
    ("N = 4.5\n", 1),
    ("noise = maybe\n", 1),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(InvalidConfigError, match=f"line {line}"):
        ex.parse_config(text)


def test_parse_with_preset_and_overrides():
    c = ex.parse_config("preset = table4-shock-mach2  # shock\nensemble = 7\nseed = 3\n")
    assert c.scenario == "standing_shock" and c.ensemble == 7 and c.seed == 3 and c.N == 160
    d = ex.parse_config("scenario = equilibrium_net_flow\n")
    assert d.net_flow_velocity == pytest.approx(0.5 * 30781)


@pytest.mark.parametrize("name", sorted(ex.PRESETS))
def test_config_round_trip(name, tmp_path):
    c = dataclasses.replace(ex.preset(name), seed=12345, output="out.csv", noise=False)
    p = tmp_path / "c.cfg"
    p.write_text(ex.dump_config(c))
    assert ex.load_config(p) == c


def test_percent_error_sign_convention():
    assert ex.percent_error(2.11e-8, 2.35e-8) == pytest.approx(-10.21, abs=0.01)
    assert ex.percent_error(19.01, 18.91) > 0


def test_emit_header_only_and_byte_identical(tmp_path):
    r = ex.RunReport("time_covariance", series_columns=("tau", "cov_measured", "stderr", "cov_theory"),
                     series=np.empty((0, 4)))
    p = ex.emit_report(r, tmp_path / "a.csv")
    assert p.read_text() == "tau,cov_measured,stderr,cov_theory\n"
    t = ex.RunReport("equilibrium_zero_flow", table=[("rho", 2.35e-8, 2.11e-8, ex.percent_error(2.11e-8, 2.35e-8))],
                     diagnostics={"steps": 5}, wall_time=1.0)
    ex.emit_report(t, tmp_path / "b.csv")
    first = (tmp_path / "b.csv").read_bytes(), (tmp_path / "b.summary.txt").read_bytes()
    ex.emit_report(t, tmp_path / "b.csv")
    assert ((tmp_path / "b.csv").read_bytes(), (tmp_path / "b.summary.txt").read_bytes()) == first
    assert (tmp_path / "b.csv").read_text().splitlines()[0] == "quantity,exact,measured,percent_error"
    assert "-10.21" in (tmp_path / "b.summary.txt").read_text()


def test_emit_to_missing_directory_fails(tmp_path):
    with pytest.raises(MeshfreeError):
        ex.emit_report(ex.RunReport("x"), tmp_path / "missing" / "r.csv")


def test_noise_disabled_equilibrium_is_silent():
    c = dataclasses.replace(ex.preset("table1-equilibrium"), n_steps=2000, n_skip=0, noise=False)
    r = ex.run(c)
    for q in ("rho", "J", "E"):
        assert r.measured(q) < 1e-20


def test_short_equilibrium_run_is_finite_and_positive():
    c = dataclasses.replace(ex.preset("table1-equilibrium"), n_steps=5000, n_skip=500, seed=3)
    r = ex.run(c)
    assert all(r.measured(q) > 0 for q in ("rho", "J", "E"))
    assert r.diagnostics["samples"] == 5000


def test_covariance_zero_lag_is_sample_second_moment():
    c = dataclasses.replace(ex.preset("table1-covariance"), n_steps=4000, n_skip=0, n_lags=5,
                            tau_max=1e-11, n_batches=4)
    r = ex.run(c)
    assert r.series.shape == (5, 4)
    assert r.series[0, 0] == 0.0
    assert r.series[0, 3] == pytest.approx(r.series[0, 1], rel=1e-14)
    assert r.diagnostics["var_R"] == r.series[0, 1]


def test_shock_t0_variance_is_zero():
    c = dataclasses.replace(ex.preset("table4-shock-mach2"), n_steps=400, sample_every=100, ensemble=3)
    r = ex.run(c)
    assert r.series[0, 0] == 0.0 and r.series[0, 1] == 0.0
    assert r.series.shape == (5, 3)
    assert np.all(r.series[1:, 1] > 0)


def test_cli_end_to_end_deterministic(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("preset = table1-equilibrium\nn_steps = 1500\nn_skip = 100\n")
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.csv"
        assert cli.main(["equilibrium", "--config", str(cfg), "--seed", "9", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert b"quantity,exact,measured,percent_error" in outs[0]
    assert "scenario: equilibrium_zero_flow" in capsys.readouterr().out


def test_cli_stdout_and_errors(tmp_path, capsys):
    assert cli.main(["shock", "--samples", "200", "--ensemble", "2", "--no-noise"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("t,var_sigma,mean_sigma\n")
    assert cli.main(["shock", "--preset", "table1-equilibrium"]) == 2
    assert "cannot run scenario" in capsys.readouterr().err
    bad = tmp_path / "bad.cfg"
    bad.write_text("N = forty\n")
    assert cli.main(["equilibrium", "--config", str(bad)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_relaxed_shock_start_is_shared_and_quiet():
    c = dataclasses.replace(ex.preset("table4-shock-mach2"), n_relax=300, n_steps=200, sample_every=100,
                            ensemble=2)
    a, left, right = ex.relaxed_shock_field(c, c.gas())
    b, _, _ = ex.relaxed_shock_field(dataclasses.replace(c, seed=99), c.gas())
    assert np.array_equal(a.x, b.x) and np.array_equal(a.rho, b.rho)
    raw, _, _ = ex.shock_field(c, c.gas())
    assert not np.array_equal(a.x, raw.x)
    r = ex.run(c)
    assert r.series[0, 1] == 0.0 and r.series[-1, 1] > 0


def test_ensemble_variance_exact_for_identical_members():
    sig = np.full((100, 3), -1.2345678901234e-5)
    sig[:, 2] += np.linspace(-1e-6, 1e-6, 100)
    var = ex.ensemble_variance(sig)
    assert var[0] == 0.0 and var[1] == 0.0
    assert var[2] == pytest.approx(np.var(sig[:, 2]), rel=1e-12)
    assert np.all(ex.ensemble_variance(sig[:1]) == 0.0)
