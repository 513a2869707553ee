import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

import oracles
from tflow.errors import ConfigurationError, StepFailure
from tflow.integrator import StepperConfig, explicit_rhs, run, step
from tflow.materials import MaterialLaws, PotentialSpec
from tflow.spectral import ScalarField, VectorField, make_grid, random_field
from tflow.state import FlowState

LAWS = MaterialLaws()


def state_from_modes(grid, u1, u2, phi, theta):
    pts = (grid.x1, grid.x2)
    ev = lambda m: oracles.evaluate(m, pts)
    u = VectorField.from_physical(grid, (ev(u1), ev(u2)))
    return FlowState.build(u, ScalarField.from_physical(grid, ev(phi)), ScalarField.from_physical(grid, ev(theta)),
                           LAWS.potential, project=False)


def solenoidal_modes(rng, bandwidth, amplitude):
    """Velocity coefficients ``(c n2, -c n1)``, divergence-free mode by mode."""
    psi = oracles.random_modes(rng, bandwidth, amplitude)
    u1 = {m: 2j * np.pi * m[1] * c for m, c in psi.items()}
    u2 = {m: -2j * np.pi * m[0] * c for m, c in psi.items()}
    return u1, u2


def random_state(seed, n=16, bandwidth=3):
    g = make_grid(n)
    r = np.random.default_rng(seed)
    u = VectorField((random_field(g, r, bandwidth=bandwidth, amplitude=0.1),
                     random_field(g, r, bandwidth=bandwidth, amplitude=0.1)))
    phi = random_field(g, r, bandwidth=bandwidth, amplitude=0.2) + 0.1
    theta = random_field(g, r, bandwidth=bandwidth, amplitude=0.1, mean_free=True) + 1.5
    return FlowState.build(u, phi, theta, LAWS.potential)


def test_stepper_config_validation():
    with pytest.raises(ConfigurationError) as err:
        StepperConfig(dt=0.0, theta_floor=-1.0, max_halvings=-1, kappa_ref=0.5, coupling="magic")
    keys = [k for k, _ in err.value.problems]
    assert keys == ["stepper.dt", "stepper.theta_floor", "stepper.max_halvings", "stepper.kappa_ref",
                    "stepper.coupling"]
    with pytest.raises(ConfigurationError) as err:
        StepperConfig(stabilization_s=0.5).validate(LAWS)
    assert err.value.key == "stepper.stabilization_s"


def test_explicit_rhs_vanishes_on_constant_state():
    g = make_grid(16)
    s = FlowState.constant(g, (0.3, -0.1), 0.2, 1.4, LAWS.potential)
    du, dphi, dtheta = explicit_rhs(s, LAWS, StepperConfig())
    for f in (du[0], du[1], dphi, dtheta):
        assert np.abs(f.coeffs).max() < 1e-14


def test_explicit_rhs_shear_example():
    # u = (sin 2 pi x2, 0) is a steady Euler flow: no advective residual
    g = make_grid(16)
    u = VectorField.from_physical(g, (np.sin(2 * np.pi * g.x2), np.zeros((16, 16))))
    s = FlowState.build(u, ScalarField.constant(g, 0.0), ScalarField.constant(g, 1.0), LAWS.potential)
    du, dphi, dtheta = explicit_rhs(s, LAWS, StepperConfig())
    assert np.abs(du.coeffs).max() < 1e-14
    assert np.abs(dphi.coeffs).max() < 1e-14
    # only viscous heating |grad u|^2 = 4 pi^2 cos^2 remains in the heat residual
    expected = 4 * np.pi**2 * np.cos(2 * np.pi * g.x2) ** 2
    assert np.allclose(dtheta.values, expected, atol=1e-11)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_explicit_rhs_dense_oracle(seed):
    n, s_stab = 8, 2.0
    r = np.random.default_rng(seed)
    u1, u2 = solenoidal_modes(r, 1, 0.05)
    phi = oracles.random_modes(r, 1, 0.3, mean=0.2)
    theta = oracles.random_modes(r, 1, 0.1, mean=1.3)
    state = state_from_modes(make_grid(n), u1, u2, phi, theta)
    du, dphi, dtheta = explicit_rhs(state, LAWS, StepperConfig(stabilization_s=s_stab))
    (e1, e2), ephi, etheta = oracles.explicit_terms(u1, u2, phi, theta, n, s_stab, 2.0)
    for m in oracles.retained_modes(n):
        assert du[0].coefficient(*m) == pytest.approx(e1[m], abs=1e-11)
        assert du[1].coefficient(*m) == pytest.approx(e2[m], abs=1e-11)
        assert dphi.coefficient(*m) == pytest.approx(ephi[m], abs=1e-10)
        assert dtheta.coefficient(*m) == pytest.approx(etheta[m], abs=1e-9)


def test_constant_state_is_a_fixed_point():
    g = make_grid(16)
    s0 = FlowState.constant(g, (0.1, -0.05), 0.2, 1.3, LAWS.potential)
    traj = run(s0, LAWS, StepperConfig(dt=1e-2), horizon=10.0, record_every=100)
    f = traj.final
    assert f.t == 10.0
    assert traj.steps == 1000
    assert np.array_equal(f.u.coeffs, s0.u.coeffs)
    assert np.array_equal(f.phi.coeffs, s0.phi.coeffs)
    assert np.array_equal(f.theta.coeffs, s0.theta.coeffs)


def test_step_preserves_invariants():
    s0 = random_state(4)
    s1 = step(s0, LAWS, StepperConfig(dt=1e-3))
    assert s1.t == pytest.approx(1e-3)
    s1.check(LAWS.potential)
    assert s1.phi.mean == s0.phi.mean
    assert np.array_equal(s1.u.mean, s0.u.mean)


def test_step_failure_when_floor_unreachable():
    s0 = random_state(5)
    cfg = StepperConfig(dt=1e-3, theta_floor=10.0, max_halvings=3)
    with pytest.raises(StepFailure) as err:
        step(s0, LAWS, cfg)
    assert err.value.state is s0
    with pytest.raises(StepFailure) as err:
        run(s0, LAWS, cfg, horizon=1.0)
    assert err.value.state.t == s0.t


def test_run_arguments():
    s0 = random_state(6)
    traj = run(s0, LAWS, StepperConfig(), horizon=s0.t)
    assert len(traj.records) == 1 and traj.steps == 0
    with pytest.raises(ConfigurationError):
        run(s0, LAWS, StepperConfig(), horizon=-1.0)
    with pytest.raises(ConfigurationError):
        run(s0, LAWS, StepperConfig(), horizon=1.0, record_every=0)


def test_run_records_and_final_time():
    s0 = random_state(7)
    seen = []
    traj = run(s0, LAWS, StepperConfig(dt=1e-3), horizon=0.0105, record_every=4,
               observers=[lambda st, rec: seen.append(rec.t)], snapshot_every=5)
    # 10 full steps and one short step; records at 0, 4, 8 and the end
    assert traj.steps == 11
    assert traj.final.t == 0.0105
    assert seen == [r.t for r in traj.records]
    assert len(traj.records) == 4
    assert [round(s.t, 6) for s in traj.snapshots] == [0.005, 0.01]


def test_run_is_deterministic():
    s0 = random_state(8)
    a = run(s0, LAWS, StepperConfig(dt=1e-3), horizon=0.02, record_every=5)
    b = run(s0, LAWS, StepperConfig(dt=1e-3), horizon=0.02, record_every=5)
    assert np.array_equal(a.final.theta.coeffs, b.final.theta.coeffs)
    assert [r.csv_row() for r in a.records] == [r.csv_row() for r in b.records]


@given(st.floats(1e-6, 1.0), st.floats(0.0, 50.0), st.floats(1.0, 100.0))
def test_implicit_symbols_never_amplify(dt, s, kappa_ref):
    # each implicit factor is >= 1 on every mode, so the linear part is contractive
    g = make_grid(16)
    kk = g.ksq
    for sym in (1 + dt * kk, 1 + dt * (kk * kk + s * kk), 1 + dt * kappa_ref * kk):
        assert sym.min() >= 1.0


def test_stokes_mode_decay_oracle():
    # u = eps (sin 2 pi x2, 0) solves the linear Stokes problem with |k|^2 = 4 pi^2
    g = make_grid(16)
    eps, T = 1e-6, 0.1
    u = VectorField.from_physical(g, (eps * np.sin(2 * np.pi * g.x2), np.zeros((16, 16))))
    s0 = FlowState.build(u, ScalarField.constant(g, 0.0), ScalarField.constant(g, 1.0), LAWS.potential)
    traj = run(s0, LAWS, StepperConfig(dt=1e-4), horizon=T, record_every=10**6)
    amp = -2 * traj.final.u[0].coefficient(0, 1).imag
    assert amp / eps == pytest.approx(math.exp(-4 * np.pi**2 * T), rel=1e-2)


def test_coupled_mode_oracle():
    # linearized (phi, theta) dynamics of one mode about (m, theta_bar), built here from scratch
    m, tb, eps, T = 0.2, 1.0, 1e-6, 0.05
    k2 = 4 * np.pi**2
    f2 = 3 * m * m - 1
    kappa = 1 + tb**2
    A = np.array([[-k2 * (k2 + f2), k2], [tb * k2 * (k2 + f2), -(tb + kappa) * k2]])
    expected = scipy.linalg.expm(A * T) @ np.array([eps, eps])
    g = make_grid(16)
    wave = np.cos(2 * np.pi * g.x1)
    s0 = FlowState.build(VectorField.constant(g, (0.0, 0.0)), ScalarField.from_physical(g, m + eps * wave),
                         ScalarField.from_physical(g, tb + eps * wave), LAWS.potential)
    traj = run(s0, LAWS, StepperConfig(dt=1e-5), horizon=T, record_every=10**6)
    got = [2 * traj.final.phi.coefficient(1, 0).real, 2 * traj.final.theta.coefficient(1, 0).real]
    assert got[0] == pytest.approx(expected[0], rel=1e-2)
    assert got[1] == pytest.approx(expected[1], rel=1e-2)


def test_lagged_coupling_is_selectable():
    s0 = random_state(9)
    a = step(s0, LAWS, StepperConfig(dt=1e-4, coupling="lagged"))
    b = step(s0, LAWS, StepperConfig(dt=1e-4))
    assert np.array_equal(a.phi.coeffs, b.phi.coeffs)
    assert not np.array_equal(a.theta.coeffs, b.theta.coeffs)


def test_polynomial_potential_needs_large_stabilization():
    laws = MaterialLaws(potential=PotentialSpec(kind="polynomial", coefficients=(25, 0, -50, 0, 25), lam=100.0))
    with pytest.raises(ConfigurationError):
        step(random_state(1), laws, StepperConfig(stabilization_s=2.0))


def test_negligible_coefficients_are_flushed_but_means_kept():
    g = make_grid(16)
    s0 = random_state(10)
    tiny = FlowState.build(s0.u * 1e-300, s0.phi * 1e-300 + 0.2, s0.theta * 1e-300 + 1.0, LAWS.potential)
    s1 = step(tiny, LAWS, StepperConfig(dt=1e-3))
    for c in (s1.u.coeffs, s1.phi.coeffs, s1.theta.coeffs):
        rest = c.copy()
        rest[..., 0, 0] = 0.0
        assert np.all(rest == 0.0)
    assert s1.phi.mean == tiny.phi.mean
    assert np.array_equal(s1.u.mean, tiny.u.mean)
    assert g == s1.grid
