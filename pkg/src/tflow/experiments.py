"""Canned scenarios, each checking one group of structural properties.

Every experiment takes a :class:`~tflow.config.RunConfig` (its canned one by
default) and returns an :class:`ExperimentResult` listing each check with the
observed value and the requirement.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .config import parse_config
from .errors import ConfigurationError
from .frames import to_moving_frame
from .initial import build_initial
from .integrator import run
from .io import write_series, write_snapshot
from .observables import DiagnosticTracker, omega_limit_detect
from .spectral import TWO_PI, VectorField
from .state import FlowState

NORM_COLUMNS = ("norm_u_H1r", "norm_phi_H3", "norm_theta_V", "norm_Ktheta_V", "norm_invtheta_L1")

CANNED = {
    "fixed_point": """
        grid.n = 16
        horizon = 10
        stepper.dt = 1e-2
        record_every = 50
        initial_condition.kind = constant
        initial_condition.m = 0.2
        initial_condition.theta_bar = 1.3
        initial_condition.velocity_mean = 0.1, -0.05
    """,
    # coupled (phi, theta) mode; the Stokes mode reuses grid and laws
    "linear_decay": """
        grid.n = 16
        horizon = 0.05
        stepper.dt = 1e-5
        record_every = 1000
        initial_condition.kind = single_mode
        initial_condition.mode = 1, 0
        initial_condition.m = 0.2
        initial_condition.theta_bar = 1.0
        initial_condition.amplitude = 1e-6
        initial_condition.theta_amplitude = 1e-6
        initial_condition.velocity_amplitude = 0
    """,
    # smooth data: every mode has |n| = 1, so dt |k|^4 stays below one
    "conservation": """
        grid.n = 64
        horizon = 1
        stepper.dt = 2e-4
        record_every = 50
        initial_condition.kind = random_bandlimited
        initial_condition.seed = 1
        initial_condition.bandwidth = 1
        initial_condition.m = 0.2
        initial_condition.theta_bar = 1.5
        initial_condition.amplitude = 0.02
        initial_condition.theta_amplitude = 0.02
        initial_condition.velocity_amplitude = 0.02
    """,
    "omega_limit": """
        grid.n = 64
        horizon = 200
        stepper.dt = 1e-3
        record_every = 1000
        initial_condition.kind = random_bandlimited
        initial_condition.seed = 1
        initial_condition.bandwidth = 6
        initial_condition.m = 0.2
        initial_condition.theta_bar = 1.5
        initial_condition.theta_min = 0.5
        initial_condition.amplitude = 0.2
        initial_condition.theta_amplitude = 0.15
        initial_condition.velocity_amplitude = 0.2
        omega.tol = 1e-6
        omega.window = 50
    """,
    "galilean": """
        grid.n = 64
        horizon = 1
        stepper.dt = 1e-4
        record_every = 1000
        initial_condition.kind = random_bandlimited
        initial_condition.seed = 1
        initial_condition.bandwidth = 6
        initial_condition.m = 0.2
        initial_condition.theta_bar = 1.5
        initial_condition.amplitude = 0.2
        initial_condition.theta_amplitude = 0.15
        initial_condition.velocity_amplitude = 0.2
    """,
}
CANNED["entropy"] = CANNED["conservation"]
CANNED["inequalities"] = "grid.n = 32\ninitial_condition.seed = 0\n"

GALILEAN_VELOCITY = (0.3, 0.0)
OMEGA_SEEDS = 3
INEQUALITY_SAMPLES = 1000


def canned_config(name):
    if name not in CANNED:
        raise ConfigurationError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}", key="experiment")
    return parse_config(CANNED[name])


@dataclass(frozen=True)
class Check:
    label: str
    observed: float
    required: str
    passed: bool

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.label}: observed {self.observed:.6g}, required {self.required}"


@dataclass
class ExperimentResult:
    name: str
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, label, observed, required, passed):
        self.checks.append(Check(label, float(observed), required, bool(passed)))

    def report(self):
        lines = [f"experiment {self.name}"] + ["  " + c.line() for c in self.checks]
        lines += [f"  artifact {a}" for a in self.artifacts]
        return "\n".join(lines)


def simulate(config, initial=None, observers=(), snapshot_every=None):
    """Run ``config`` (from ``initial`` if given) and return the trajectory."""
    state = initial if initial is not None else build_initial(config)
    tracker = DiagnosticTracker(config.laws, r=config.r, alpha=config.alpha)
    every = config.snapshot_every if snapshot_every is None else snapshot_every
    return run(
        state, config.laws, config.stepper, config.horizon, record_every=config.record_every,
        observers=observers, tracker=tracker, snapshot_every=every,
    )


def _save_series(result, outdir, stem, records):
    if outdir is None:
        return
    path = os.path.join(outdir, f"{stem}.csv")
    write_series(records, path)
    result.artifacts.append(path)


def _column(records, name):
    return np.array([getattr(r, name) for r in records])


# --- fixed point -----------------------------------------------------------

def fixed_point(config, outdir=None):
    res = ExperimentResult("fixed_point")
    s0 = build_initial(config)
    traj = simulate(config, s0)
    first = traj.records[0].csv_row()[1:]
    changed = sum(r.csv_row()[1:] != first for r in traj.records)
    res.add("records differing from the first (except t)", changed, "== 0", changed == 0)
    f = traj.final
    pairs = [(s0.u.coeffs, f.u.coeffs), (s0.phi.coeffs, f.phi.coeffs), (s0.theta.coeffs, f.theta.coeffs)]
    diff = max(float(np.abs(a - b).max()) for a, b in pairs)
    res.add("max coefficient change of the final state", diff, "== 0", diff == 0.0)
    res.add("final time", f.t, f"== {config.horizon}", f.t == config.horizon)
    _save_series(res, outdir, "fixed_point_series", traj.records)
    return res


# --- linear modes ------------------------------------------------------------

def coupled_mode_matrix(m, theta_bar, ksq, potential, q):
    """Linearization of the (phi, theta) equations for one Fourier mode with ``|k|^2 = ksq``."""
    f2 = float(potential.Fsecond(m))
    kappa = 1.0 + theta_bar**q
    return np.array([
        [-ksq * (ksq + f2), ksq],
        [theta_bar * ksq * (ksq + f2), -(theta_bar + kappa) * ksq],
    ])


def _mode_amplitude(field, mode):
    c = field.coefficient(*mode)
    return 2.0 * c.real


def stokes_decay(config, amplitude=1e-6, horizon=0.1, dt=1e-4):
    """Relative decay of a shear mode ``u = (eps sin(2 pi x2), 0)``; returns (observed, exact)."""
    ic = replace(config.initial, kind="single_mode", mode=(0, 1), velocity_amplitude=amplitude,
                 amplitude=0.0, theta_amplitude=0.0, m=0.0, theta_bar=1.0, velocity_mean=(0.0, 0.0))
    cfg = replace(config, initial=ic, horizon=horizon, stepper=replace(config.stepper, dt=dt),
                  record_every=10**9)
    s0 = build_initial(cfg)
    traj = simulate(cfg, s0)
    grid = s0.grid
    ratio = math.sqrt(grid.mean_square(traj.final.u.coeffs).sum() / grid.mean_square(s0.u.coeffs).sum())
    return ratio, math.exp(-(TWO_PI**2) * horizon)


def coupled_decay(config):
    """Numerical and matrix-exponential amplitudes of the configured single mode."""
    ic = config.initial
    s0 = build_initial(config)
    traj = simulate(config, s0)
    ksq = TWO_PI**2 * (ic.mode[0] ** 2 + ic.mode[1] ** 2)
    A = coupled_mode_matrix(ic.m, ic.theta_bar, ksq, config.potential, config.conductivity.q)
    expected = scipy.linalg.expm(A * (traj.final.t - s0.t)) @ np.array([ic.amplitude, ic.theta_amplitude])
    observed = np.array([_mode_amplitude(traj.final.phi, ic.mode), _mode_amplitude(traj.final.theta, ic.mode)])
    return observed, expected


def linear_decay(config, outdir=None):
    res = ExperimentResult("linear_decay")
    ratio, exact = stokes_decay(config)
    err = abs(ratio - exact) / exact
    res.add("Stokes mode decay vs exp(-4 pi^2 t), relative error", err, "<= 1e-2", err <= 1e-2)
    observed, expected = coupled_decay(config)
    for i, name in enumerate(("phi", "theta")):
        e = abs(observed[i] - expected[i]) / abs(expected[i])
        res.add(f"coupled mode {name} amplitude vs matrix exponential, relative error", e, "<= 1e-2", e <= 1e-2)
    res.details.update(stokes=(ratio, exact), coupled=(observed.tolist(), expected.tolist()))
    return res


# --- conservation, energy and entropy ----------------------------------------

def mean_drift(records):
    """Largest change of the phi mean and of each velocity-mean component."""
    phi = _column(records, "mass_phi")
    mom = np.array([r.momentum_u for r in records])
    return float(np.abs(phi - phi[0]).max()), float(np.abs(mom - mom[0]).max())


def energy_drift(records):
    """``max_t |E(t) - E(0)| / |E(0)|``."""
    e = _column(records, "energy_E")
    return float(np.abs(e - e[0]).max() / abs(e[0]))


def refinement_pair(config):
    """Trajectories of ``config`` at ``dt`` and ``dt / 2`` from the same initial state."""
    s0 = build_initial(config)
    coarse = simulate(config, s0)
    fine_cfg = replace(config, stepper=replace(config.stepper, dt=config.stepper.dt / 2),
                       record_every=2 * config.record_every)
    return coarse, simulate(fine_cfg, s0), fine_cfg


def conservation(config, outdir=None):
    res = ExperimentResult("conservation")
    coarse, fine, fine_cfg = refinement_pair(config)
    for traj, dt in ((coarse, config.stepper.dt), (fine, fine_cfg.stepper.dt)):
        dphi, du = mean_drift(traj.records)
        res.add(f"dt={dt:g}: max |phi mean drift|", dphi, "<= 1e-12", dphi <= 1e-12)
        res.add(f"dt={dt:g}: max |velocity mean drift|", du, "<= 1e-12", du <= 1e-12)
    d1, d2 = energy_drift(coarse.records), energy_drift(fine.records)
    ratio = d1 / d2 if d2 > 0 else math.inf
    res.add("energy drift ratio dt / (dt/2)", ratio, "in [1.7, 2.3]", 1.7 <= ratio <= 2.3)
    res.add(f"relative energy drift at dt={fine_cfg.stepper.dt:g}", d2, "<= 1e-3", d2 <= 1e-3)
    _save_series(res, outdir, "conservation_coarse", coarse.records)
    _save_series(res, outdir, "conservation_fine", fine.records)
    return res


def entropy_checks(records, dt):
    """Worst growth rate of the mean of -log theta and the smallest production rate."""
    neg = -_column(records, "entropy")
    t = _column(records, "t")
    rate = np.diff(neg) / np.diff(t) if len(t) > 1 else np.zeros(1)
    return float(rate.max()), float(_column(records, "entropy_production_rate").min())


def entropy(config, outdir=None):
    res = ExperimentResult("entropy")
    coarse, fine, fine_cfg = refinement_pair(config)
    for traj, dt in ((coarse, config.stepper.dt), (fine, fine_cfg.stepper.dt)):
        worst, low = entropy_checks(traj.records, dt)
        res.add(f"dt={dt:g}: growth rate of mean(-log theta)", worst, f"<= 10 dt = {10 * dt:g}", worst <= 10 * dt)
        res.add(f"dt={dt:g}: min entropy production rate", low, ">= 0", low >= 0)
        jensen = max(-math.log(r.mean_theta) + r.entropy for r in traj.records)
        res.add(f"dt={dt:g}: max of -log(mean theta) - mean(-log theta)", jensen, "<= 1e-12", jensen <= 1e-12)
    _save_series(res, outdir, "entropy_coarse", coarse.records)
    _save_series(res, outdir, "entropy_fine", fine.records)
    return res


# --- long-time behaviour ------------------------------------------------------

@dataclass
class LongRun:
    seed: int
    records: list
    verdict: object
    final: FlowState


def long_run(config, seed=None):
    if seed is not None:
        config = replace(config, initial=replace(config.initial, seed=seed))
    traj = simulate(config)
    verdict = omega_limit_detect(traj.records, tol=config.omega_tol, window=config.omega_window)
    return LongRun(config.initial.seed, traj.records, verdict, traj.final)


def saturation(records, fraction=0.1):
    """Growth of ``diss_u + diss_mu`` and ``diss_theta`` over the final ``fraction`` of the horizon, relative to totals."""
    t = _column(records, "t")
    cut = t[-1] - fraction * (t[-1] - t[0])
    i = int(np.searchsorted(t, cut))
    out = {}
    for label, total in (
        ("diss_u + diss_mu", _column(records, "diss_u") + _column(records, "diss_mu")),
        ("diss_theta", _column(records, "diss_theta")),
    ):
        out[label] = (total[-1] - total[i]) / total[-1] if total[-1] > 0 else 0.0
    return out


def regularity_growth(records, fraction=0.1):
    """For each tracked norm, its maximum over the run divided by its maximum over the first ``fraction``."""
    t = _column(records, "t")
    early = t <= t[0] + fraction * (t[-1] - t[0])
    out = {}
    for name in NORM_COLUMNS:
        col = _column(records, name)
        out[name] = float(col.max() / col[early].max())
    return out


def moment_fit(records):
    """Smallest ``c`` with ``int theta^(1-alpha)(t) <= initial + c diss_theta(t)`` on every record."""
    m = _column(records, "neg_moment_alpha")
    d = _column(records, "diss_theta")
    pos = d > 0
    if not pos.any():
        return 0.0
    return float(np.max((m[pos] - m[0]) / d[pos]))


def omega_run_checks(res, lr, prefix=""):
    v = lr.verdict
    last = lr.records[-1]
    res.add(f"{prefix}terminal |grad u|", last.grad_u, "<= 1e-6", last.grad_u <= 1e-6)
    res.add(f"{prefix}terminal |grad mu|", last.grad_mu, "<= 1e-6", last.grad_mu <= 1e-6)
    res.add(f"{prefix}terminal |grad theta|", last.grad_theta, "<= 1e-6", last.grad_theta <= 1e-6)
    res.add(f"{prefix}terminal reduced residual", last.reduced_residual, "<= 1e-5", last.reduced_residual <= 1e-5)
    res.add(f"{prefix}omega-limit detector verdict", float(v.converged), "converged", v.converged)
    res.add(f"{prefix}theta_inf / exp(-R)", v.theta_inf / v.jensen_bound, ">= 1 - 1e-6", v.jensen_ok)
    for label, growth in saturation(lr.records).items():
        res.add(f"{prefix}{label} growth over the final 10%", growth, "<= 1e-2", growth <= 1e-2)
    for name, g in regularity_growth(lr.records).items():
        res.add(f"{prefix}{name} max / early max", g, "<= 3", g <= 3.0)


def omega_limit(config, outdir=None, seeds=None):
    """Long runs from ``seeds`` (default: the configured seed and the next two)."""
    res = ExperimentResult("omega_limit")
    if seeds is None:
        seeds = [config.initial.seed + i for i in range(OMEGA_SEEDS)]
    fits = []
    for seed in seeds:
        lr = long_run(config, seed)
        omega_run_checks(res, lr, prefix=f"seed {seed}: ")
        fits.append(moment_fit(lr.records))
        res.details[f"seed {seed}"] = lr.verdict
        _save_series(res, outdir, f"omega_limit_seed{seed}", lr.records)
        if outdir is not None:
            path = os.path.join(outdir, f"omega_limit_seed{seed}_final.tfs")
            write_snapshot(lr.final, path)
            res.artifacts.append(path)
    res.details["moment_fits"] = fits
    if len(fits) > 1:
        spread = moment_fit_spread(fits)
        res.add(f"negative-moment constant spread across seeds (fits {', '.join(f'{c:.4g}' for c in fits)})",
                spread, "<= 0.2", spread <= 0.2)
    return res


def moment_fit_spread(fits):
    """Largest relative deviation of the fitted constants from their mean."""
    fits = np.asarray(fits, dtype=float)
    mean = fits.mean()
    if mean == 0:
        return 0.0 if np.all(fits == 0) else math.inf
    return float(np.max(np.abs(fits - mean)) / abs(mean))


# --- Galilean covariance ----------------------------------------------------

def galilean_discrepancy(config, m=GALILEAN_VELOCITY):
    """Max-norm mismatch between the moving-frame view of a drifting run and the run at rest."""
    m = np.asarray(m, dtype=np.float64)
    rest0 = build_initial(replace(config, initial=replace(config.initial, velocity_mean=(0.0, 0.0))))
    drift0 = FlowState.build(rest0.u + VectorField.constant(rest0.grid, m), rest0.phi, rest0.theta,
                             config.potential, t=rest0.t)
    rest = simulate(config, rest0).final
    drift = simulate(config, drift0).final
    seen = to_moving_frame(drift, m, config.potential)
    out = {}
    for name, a, b in (("u", seen.u.values, rest.u.values), ("phi", seen.phi.values, rest.phi.values),
                       ("theta", seen.theta.values, rest.theta.values)):
        out[name] = float(np.abs(a - b).max())
    return out


def galilean(config, outdir=None):
    res = ExperimentResult("galilean")
    for name, d in galilean_discrepancy(config).items():
        res.add(f"moving-frame discrepancy in {name} (max norm)", d, "<= 1e-6", d <= 1e-6)
    return res


# --- inequalities -------------------------------------------------------------

def inequalities(config, outdir=None, samples=INEQUALITY_SAMPLES):
    from .inequalities import hard_failures, run_all, write_report

    res = ExperimentResult("inequalities")
    reports = run_all(samples, config.initial.seed, n=config.n)
    bad = hard_failures(reports)
    for rep in reports:
        exact = rep.name in ("interpolation_Hs", "friedrichs")
        bound = 1.0 if rep.name == "interpolation_Hs" else 1.0 / TWO_PI
        required = f"<= {bound:.6g} (1 + 1e-12)" if exact else "finite"
        res.add(f"{rep.name} {rep.parameters}", rep.max_ratio, required, rep not in bad)
    if outdir is not None:
        path = os.path.join(outdir, "inequalities.csv")
        with open(path, "w", encoding="ascii", newline="") as fh:
            write_report(reports, fh)
        res.artifacts.append(path)
    res.details["reports"] = reports
    return res


EXPERIMENTS: dict = {
    "fixed_point": fixed_point,
    "linear_decay": linear_decay,
    "conservation": conservation,
    "entropy": entropy,
    "omega_limit": omega_limit,
    "galilean": galilean,
    "inequalities": inequalities,
}


def run_experiment(name, config=None, outdir=None):
    """Run a named experiment with ``config`` (its canned configuration when ``None``)."""
    if name not in EXPERIMENTS:
        raise ConfigurationError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}", key="experiment")
    if config is None:
        config = canned_config(name)
    if outdir is not None:
        os.makedirs(outdir, exist_ok=True)
    return EXPERIMENTS[name](config, outdir=outdir)
