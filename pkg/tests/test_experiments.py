import math

import numpy as np
import pytest

from tflow.config import parse_config
from tflow.errors import ConfigurationError
from tflow.experiments import (
    CANNED, EXPERIMENTS, Check, ExperimentResult, canned_config, coupled_mode_matrix, energy_drift, mean_drift,
    moment_fit, moment_fit_spread, regularity_growth, run_experiment, saturation, simulate,
)
from tflow.materials import PotentialSpec


def test_every_experiment_has_a_canned_config():
    assert set(CANNED) == set(EXPERIMENTS)
    for name in EXPERIMENTS:
        canned_config(name)
    with pytest.raises(ConfigurationError):
        canned_config("nope")
    with pytest.raises(ConfigurationError):
        run_experiment("nope")


def test_result_reporting():
    res = ExperimentResult("demo")
    res.add("x", 0.5, "<= 1", True)
    assert res.passed
    res.add("y", 2.0, "<= 1", False)
    assert not res.passed
    assert res.report().splitlines() == [
        "experiment demo", "  [PASS] x: observed 0.5, required <= 1", "  [FAIL] y: observed 2, required <= 1"]
    assert Check("z", 1.0, "== 1", True).line() == "[PASS] z: observed 1, required == 1"


def test_coupled_mode_matrix_values():
    A = coupled_mode_matrix(0.2, 1.0, 4 * math.pi**2, PotentialSpec(), 2.0)
    k2 = 4 * math.pi**2
    f2 = 3 * 0.04 - 1
    assert np.allclose(A, [[-k2 * (k2 + f2), k2], [k2 * (k2 + f2), -3 * k2]])
    assert np.allclose(sorted(np.linalg.eigvals(A).real), [-1565.4, -76.86], rtol=1e-3)


def test_fixed_point_experiment():
    res = run_experiment("fixed_point")
    assert res.passed, res.report()


def test_linear_decay_experiment():
    res = run_experiment("linear_decay")
    assert res.passed, res.report()


def test_inequalities_experiment_small(tmp_path):
    from tflow.experiments import inequalities
    res = inequalities(canned_config("inequalities"), outdir=str(tmp_path), samples=20)
    assert res.passed
    assert (tmp_path / "inequalities.csv").exists()


def test_short_run_helpers():
    cfg = parse_config("grid.n = 16\nhorizon = 0.05\nstepper.dt = 1e-3\nrecord_every = 5\ninitial_condition.seed = 2")
    recs = simulate(cfg).records
    dphi, du = mean_drift(recs)
    assert dphi <= 1e-15 and du <= 1e-15
    assert math.isfinite(energy_drift(recs)) and energy_drift(recs) >= 0
    sat = saturation(recs)
    assert set(sat) == {"diss_u + diss_mu", "diss_theta"}
    assert all(0 <= v <= 1 for v in sat.values())
    growth = regularity_growth(recs)
    assert all(g >= 1.0 for g in growth.values())
    assert math.isfinite(moment_fit(recs))


def test_moment_fit_and_spread():
    class R:
        def __init__(self, m, d):
            self.neg_moment_alpha, self.diss_theta = m, d
    assert moment_fit([R(1.0, 0.0), R(1.2, 1.0), R(1.1, 2.0)]) == pytest.approx(0.2)
    assert moment_fit([R(1.0, 0.0)]) == 0.0
    assert moment_fit_spread([1.0, 1.0, 1.0]) == 0.0
    assert moment_fit_spread([0.9, 1.0, 1.1]) == pytest.approx(0.1)
    assert moment_fit_spread([0.0, 0.0]) == 0.0
    assert moment_fit_spread([-1.0, 1.0]) == math.inf
