"""Linearly implicit IMEX time stepping for the coupled flow/phase/heat system.

Per retained mode with ``kk = 4 pi^2 |n|^2`` one step solves

    (1 + dt kk)               u+     = u     + dt du
    (1 + dt (kk^2 + s kk))    phi+   = phi   + dt dphi
    (1 + dt kappa_ref kk)     theta+ = theta + dt dtheta

with the explicit residuals of :func:`explicit_rhs`.  All transport terms are
written in divergence form, so the zero modes of ``u`` and ``phi`` never
change: momentum and mass are conserved to the last bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, PositivityError, StepFailure
from .materials import MaterialLaws, fprime_coeffs
from .spectral import ScalarField, VectorField, leray_coeffs
from .state import FlowState

COUPLINGS = ("semi_implicit", "lagged")

# Decaying coefficients below this only shrink further; zeroing them keeps the
# arithmetic out of the subnormal range, which is several times slower.
FLUSH_BELOW = 1e-150


def _flush(c):
    tiny = np.abs(c) < FLUSH_BELOW
    tiny[..., 0, 0] = False
    return np.where(tiny, 0.0, c)


@dataclass(frozen=True)
class StepperConfig:
    """Time step and splitting parameters.

    ``kappa_ref=None`` refreshes the implicit conductivity each step to
    ``1 + max(theta)^q``.  ``coupling`` selects which chemical potential feeds
    the temperature equation: ``"lagged"`` uses ``mu`` of the current state,
    ``"semi_implicit"`` the one consistent with the phase update just taken.
    """

    dt: float = 1e-3
    stabilization_s: float = 2.0
    theta_floor: float = 1e-8
    max_halvings: int = 20
    kappa_ref: Optional[float] = None
    coupling: str = "semi_implicit"

    def __post_init__(self):
        problems = []
        if not self.dt > 0:
            problems.append(("stepper.dt", f"stepper.dt must be > 0, got {self.dt}"))
        if not self.theta_floor > 0:
            problems.append(("stepper.theta_floor", f"stepper.theta_floor must be > 0, got {self.theta_floor}"))
        if self.max_halvings < 0:
            problems.append(("stepper.max_halvings", f"stepper.max_halvings must be >= 0, got {self.max_halvings}"))
        if self.kappa_ref is not None and not self.kappa_ref >= 1:
            problems.append(("stepper.kappa_ref", f"stepper.kappa_ref must be >= 1, got {self.kappa_ref}"))
        if self.coupling not in COUPLINGS:
            problems.append(("stepper.coupling", f"stepper.coupling must be one of {COUPLINGS}, got {self.coupling!r}"))
        if problems:
            raise ConfigurationError("; ".join(m for _, m in problems), key=problems[0][0], problems=problems)

    def validate(self, laws):
        if self.stabilization_s < laws.potential.lam:
            raise ConfigurationError(
                f"stepper.stabilization_s = {self.stabilization_s} is below lambda = {laws.potential.lam}",
                key="stepper.stabilization_s",
            )
        return self


class _Prepared:
    """Physical-space quantities of one state, shared by the residual and the update."""

    __slots__ = ("t", "uh", "ph", "th", "fp", "mh", "u1", "u2", "phi", "theta",
                 "grad_u", "grad_phi", "kappa_ref")


class _Engine:
    def __init__(self, grid, laws, cfg):
        cfg.validate(laws)
        self.grid = grid
        self.laws = laws
        self.cfg = cfg
        self.q = laws.conductivity.q
        self._K = laws.conductivity.K

    def prepare(self, t, uh, ph, th):
        g = self.grid
        ddx, ddy = g.ddx, g.ddy
        phys = g.inverse(np.stack([
            uh[0], uh[1], ph, th,
            ddx * ph, ddy * ph,
            ddx * uh[0], ddy * uh[0], ddx * uh[1], ddy * uh[1],
        ]))
        p = _Prepared()
        p.t, p.uh, p.ph, p.th = t, uh, ph, th
        p.u1, p.u2, p.phi, p.theta = phys[0], phys[1], phys[2], phys[3]
        p.grad_phi = phys[4:6]
        p.grad_u = phys[6:10]
        tmin = float(p.theta.min())
        if not tmin > 0:
            raise PositivityError(f"temperature minimum {tmin:.6g} at t={t:.6g}")
        p.fp = fprime_coeffs(g, self.laws.potential, p.phi)
        p.mh = g.ksq * ph + p.fp - th
        p.kappa_ref = self.cfg.kappa_ref if self.cfg.kappa_ref is not None else 1.0 + float(p.theta.max()) ** self.q
        return p

    def momentum_phase_rhs(self, p):
        g = self.grid
        ddx, ddy = g.ddx, g.ddy
        s = self.cfg.stabilization_s
        p1, p2 = p.grad_phi
        prods = g.forward(np.stack([
            p.u1 * p.u1 + p1 * p1,
            p.u1 * p.u2 + p1 * p2,
            p.u2 * p.u2 + p2 * p2,
            p.u1 * p.phi,
            p.u2 * p.phi,
        ])) * g.dealias_mask
        t11, t12, t22, f1, f2 = prods
        du = leray_coeffs(g, -(ddx * t11 + ddy * t12), -(ddx * t12 + ddy * t22))
        dphi = -(ddx * f1 + ddy * f2) - g.ksq * (p.fp - p.th - s * p.ph)
        return np.stack(du), dphi

    def theta_rhs(self, p, mh):
        """Explicit temperature residual with the given chemical potential coefficients."""
        g = self.grid
        ddx, ddy = g.ddx, g.ddy
        lap_mu, m1, m2 = g.inverse(np.stack([-g.ksq * mh, ddx * mh, ddy * mh]))
        heat = np.sum(p.grad_u**2, axis=0) + m1 * m1 + m2 * m2
        # div((kappa - kappa_ref) grad theta) = Lap(K(theta) - kappa_ref theta) since K' = kappa
        prods = g.forward(np.stack([
            p.u1 * p.theta,
            p.u2 * p.theta,
            self._K(p.theta) - p.kappa_ref * p.theta,
            heat - p.theta * lap_mu,
        ])) * g.dealias_mask
        return -(ddx * prods[0] + ddy * prods[1]) - g.ksq * prods[2] + prods[3]

    def attempt(self, p, dt, rhs_up=None):
        g = self.grid
        s = self.cfg.stabilization_s
        du, dphi = rhs_up if rhs_up is not None else self.momentum_phase_rhs(p)
        ksq = g.ksq
        uh = (p.uh + dt * du) / (1.0 + dt * ksq)
        uh = np.stack(leray_coeffs(g, uh[0], uh[1]))
        ph = (p.ph + dt * dphi) / (1.0 + dt * (ksq * ksq + s * ksq))
        if self.cfg.coupling == "semi_implicit":
            mh = ksq * ph + p.fp - p.th + s * (ph - p.ph)
        else:
            mh = p.mh
        th = (p.th + dt * self.theta_rhs(p, mh)) / (1.0 + dt * p.kappa_ref * ksq)
        return _flush(uh), _flush(ph), _flush(th)

    def advance(self, p, dt):
        """Take one step of at most ``dt``, halving on positivity loss; returns (uh, ph, th, dt_used)."""
        rhs_up = self.momentum_phase_rhs(p)
        floor = self.cfg.theta_floor
        for _ in range(self.cfg.max_halvings + 1):
            uh, ph, th = self.attempt(p, dt, rhs_up)
            if float(self.grid.inverse(th).min()) > floor:
                return uh, ph, th, dt
            dt *= 0.5
        raise StepFailure(
            f"temperature fell below {floor:g} after {self.cfg.max_halvings} halvings at t={p.t:.6g}",
            state=p, t=p.t,
        )

    def to_state(self, p):
        return FlowState.from_coeffs(self.grid, p.t, p.uh, p.ph, p.th, p.mh)


def explicit_rhs(state, laws, cfg):
    """Non-stiff residuals ``(du, dphi, dtheta)`` of the current state.

    ``du = P[-(u.grad)u - div(grad phi x grad phi)]``,
    ``dphi = -u.grad phi + Lap(F'(phi) - theta - s phi)`` and
    ``dtheta = -u.grad theta - theta Lap mu + div(kappa grad theta) - kappa_ref Lap theta + |grad u|^2 + |grad mu|^2``,
    all products dealiased.
    """
    engine = _Engine(state.grid, laws, cfg)
    p = engine.prepare(state.t, state.u.coeffs, state.phi.coeffs, state.theta.coeffs)
    du, dphi = engine.momentum_phase_rhs(p)
    dtheta = engine.theta_rhs(p, state.mu.coeffs)
    g = state.grid
    return VectorField.from_spectral(g, du), ScalarField.from_spectral(g, dphi), ScalarField.from_spectral(g, dtheta)


def step(state, laws, cfg):
    """Advance ``state`` by ``cfg.dt`` (or a halved step if positivity demands it)."""
    engine = _Engine(state.grid, laws, cfg)
    p = engine.prepare(state.t, state.u.coeffs, state.phi.coeffs, state.theta.coeffs)
    try:
        uh, ph, th, dt = engine.advance(p, cfg.dt)
    except StepFailure as exc:
        exc.state = state
        raise
    q = engine.prepare(state.t + dt, uh, ph, th)
    return engine.to_state(q)


@dataclass
class Trajectory:
    final: FlowState
    records: list
    steps: int = 0
    halvings: int = 0
    snapshots: list = field(default_factory=list)


def run(
    initial: FlowState,
    laws: MaterialLaws,
    cfg: StepperConfig,
    horizon: float,
    record_every: int = 1,
    observers: Sequence[Callable] = (),
    tracker=None,
    snapshot_every: int = 0,
):
    """Integrate from ``initial`` up to ``horizon``.

    A record is taken at the start, every ``record_every`` steps and at the
    end; each observer is called as ``observer(state, record)``.  With
    ``snapshot_every > 0`` the states at those step counts are kept in
    ``Trajectory.snapshots``.
    """
    from .observables import DiagnosticTracker

    if horizon < initial.t:
        raise ConfigurationError(f"horizon {horizon} lies before the initial time {initial.t}", key="horizon")
    if record_every < 1:
        raise ConfigurationError("record_every must be >= 1", key="record_every")
    engine = _Engine(initial.grid, laws, cfg)
    tracker = tracker if tracker is not None else DiagnosticTracker(laws)
    traj = Trajectory(final=initial, records=[])

    def emit(p):
        state = engine.to_state(p)
        rec = tracker.record(state)
        traj.records.append(rec)
        for obs in observers:
            obs(state, rec)
        return state

    p = engine.prepare(initial.t, initial.u.coeffs, initial.phi.coeffs, initial.theta.coeffs)
    tracker.start(engine.grid, p)
    state = emit(p)
    nstep = 0
    last_recorded = 0
    tol = 1e-9 * cfg.dt
    while horizon - p.t > tol:
        dt = min(cfg.dt, horizon - p.t)
        try:
            uh, ph, th, used = engine.advance(p, dt)
        except StepFailure as exc:
            exc.state = engine.to_state(p)
            raise
        if used < dt:
            traj.halvings += int(round(math.log2(dt / used)))
        t_new = p.t + used
        if abs(horizon - t_new) <= tol:
            t_new = horizon
        p = engine.prepare(t_new, uh, ph, th)
        tracker.advance(p)
        nstep += 1
        if nstep % record_every == 0:
            state = emit(p)
            last_recorded = nstep
        if snapshot_every and nstep % snapshot_every == 0:
            traj.snapshots.append(engine.to_state(p))
    if last_recorded != nstep:
        state = emit(p)
    traj.final = state
    traj.steps = nstep
    return traj
