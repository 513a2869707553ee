import numpy as np
import pytest

from tflow.config import SCHEMA, load_config, parse_config
from tflow.errors import ConfigurationError, PositivityError
from tflow.initial import build_initial
from tflow.io import write_snapshot
from tflow.materials import QUARTIC_COEFFICIENTS


def test_defaults():
    cfg = parse_config("")
    assert cfg.n == 64
    assert cfg.potential.coefficients == QUARTIC_COEFFICIENTS
    assert cfg.stepper.dt == 1e-3 and cfg.stepper.stabilization_s == 2.0
    assert cfg.stepper.kappa_ref is None and cfg.stepper.coupling == "semi_implicit"
    assert cfg.initial.kind == "random_bandlimited"
    assert cfg.r == 0.5 and cfg.alpha == 2.0
    assert len(SCHEMA) == 35


def test_parsing_values_and_comments():
    cfg = parse_config("""
        # comment line
        grid.n = 32            # trailing comment
        potential.kind = polynomial
        potential.coefficients = [0.25, 0, -0.5, 0, 0.25]
        stepper.kappa_ref = auto
        stepper.dt = 5e-4
        initial_condition.velocity_mean = (0.1 -0.2)
        initial_condition.mode = 2, 1
        initial_condition.theta_min = none
        outputs.series = "out/series.csv"
    """)
    assert cfg.n == 32
    assert cfg.potential.kind == "polynomial"
    assert cfg.stepper.kappa_ref is None
    assert cfg.initial.velocity_mean == (0.1, -0.2)
    assert cfg.initial.mode == (2, 1)
    assert cfg.series_path == "out/series.csv"


def test_every_problem_is_reported():
    with pytest.raises(ConfigurationError) as err:
        parse_config("""
            grid.n = 7
            conductivity.q = 1.5
            stepper.dt = -1
            stepper.theta_floor = 0
            wrong.key = 1
            horizon = soon
            initial_condition.kind = spiral
            initial_condition.kind = constant
            no equals sign
        """)
    keys = [k for k, _ in err.value.problems]
    for key in ("grid.n", "conductivity.q", "stepper.dt", "stepper.theta_floor", "wrong.key", "horizon",
                "initial_condition.kind"):
        assert key in keys
    assert None in keys
    msg = str(err.value)
    assert msg.startswith("invalid configuration:")
    assert "conductivity.q must lie in [2, inf), got 1.5" in msg
    assert "duplicate key" in msg


def test_cross_field_checks():
    with pytest.raises(ConfigurationError) as err:
        parse_config("grid.n = 16\ninitial_condition.bandwidth = 6\ninitial_condition.mode = 7, 0")
    assert {k for k, _ in err.value.problems} == {"initial_condition.bandwidth", "initial_condition.mode"}
    with pytest.raises(ConfigurationError, match="below lambda"):
        parse_config("potential.lambda = 3\nstepper.stabilization_s = 2")
    with pytest.raises(ConfigurationError, match="required"):
        parse_config("initial_condition.kind = from_snapshot")
    with pytest.raises(ConfigurationError):
        parse_config("diagnostics.r = 0.75")


def test_load_config(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("grid.n = 16\n")
    assert load_config(p).n == 16
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.cfg")


def test_initial_constant_and_single_mode():
    s = build_initial(parse_config("grid.n = 16\ninitial_condition.kind = constant\ninitial_condition.m = 0.3\n"
                                   "initial_condition.theta_bar = 2\ninitial_condition.velocity_mean = 0.1, 0"))
    assert s.phi.mean == pytest.approx(0.3) and s.theta.mean == pytest.approx(2.0)
    assert np.allclose(s.u.values[0], 0.1)
    s = build_initial(parse_config("grid.n = 16\ninitial_condition.kind = single_mode\ninitial_condition.mode = 1, 2\n"
                                   "initial_condition.amplitude = 0.01\ninitial_condition.velocity_amplitude = 0.2"))
    assert 2 * s.phi.coefficient(1, 2).real == pytest.approx(0.01)
    s.check()
    with pytest.raises(ConfigurationError):
        build_initial(parse_config("grid.n = 16\ninitial_condition.kind = single_mode\ninitial_condition.mode = 0, 0"))


def test_initial_random_is_seeded_and_respects_theta_min():
    text = "grid.n = 32\ninitial_condition.seed = {}\ninitial_condition.theta_min = 0.5\ninitial_condition.theta_bar = 0.1\n" \
           "initial_condition.theta_amplitude = 0.3\ninitial_condition.m = 0.2"
    a = build_initial(parse_config(text.format(4)))
    b = build_initial(parse_config(text.format(4)))
    c = build_initial(parse_config(text.format(5)))
    assert np.array_equal(a.theta.coeffs, b.theta.coeffs)
    assert not np.array_equal(a.theta.coeffs, c.theta.coeffs)
    assert a.theta.values.min() == pytest.approx(0.5, abs=1e-12)
    assert a.phi.mean == pytest.approx(0.2, abs=1e-15)
    a.check(parse_config("").potential)


def test_initial_positivity_becomes_configuration_error():
    with pytest.raises(ConfigurationError) as err:
        build_initial(parse_config("grid.n = 16\ninitial_condition.theta_bar = 0.01\ninitial_condition.theta_amplitude = 1"))
    assert err.value.key == "initial_condition.theta_bar"
    assert isinstance(err.value.__cause__, PositivityError)


def test_initial_from_snapshot(tmp_path):
    s = build_initial(parse_config("grid.n = 16"))
    path = tmp_path / "s.tfs"
    write_snapshot(s, path)
    back = build_initial(parse_config(f"grid.n = 16\ninitial_condition.kind = from_snapshot\ninitial_condition.path = {path}"))
    assert np.allclose(back.theta.values, s.theta.values, atol=1e-15)
    with pytest.raises(ConfigurationError, match="n=16"):
        build_initial(parse_config(f"grid.n = 32\ninitial_condition.kind = from_snapshot\ninitial_condition.path = {path}"))
