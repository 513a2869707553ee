"""Initial states described by :class:`~tflow.config.InitialCondition`."""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, PositivityError
from .io import read_snapshot
from .spectral import TWO_PI, ScalarField, VectorField, random_field
from .state import FlowState


def _constant_state(grid, ic, potential):
    return FlowState.constant(grid, ic.velocity_mean, ic.m, ic.theta_bar, potential)


def _single_mode(grid, ic, potential):
    a, b = ic.mode
    norm = np.hypot(a, b)
    if norm == 0:
        raise ConfigurationError("initial_condition.mode must not be (0, 0)", key="initial_condition.mode")
    w = TWO_PI * (a * grid.x1 + b * grid.x2)
    wave = np.cos(w)
    # velocity along (b, -a)/|n| with sin(w) profile is divergence-free
    s = ic.velocity_amplitude * np.sin(w) / norm
    u = VectorField.from_physical(grid, (ic.velocity_mean[0] + b * s, ic.velocity_mean[1] - a * s))
    phi = ScalarField.from_physical(grid, ic.m + ic.amplitude * wave)
    theta = ScalarField.from_physical(grid, ic.theta_bar + ic.theta_amplitude * wave)
    return FlowState.build(u, phi, theta, potential, project=False)


def _random(grid, ic, potential):
    rng = np.random.default_rng(ic.seed)
    kw = dict(gamma=ic.gamma, bandwidth=ic.bandwidth, mean_free=True)
    u1 = random_field(grid, rng, amplitude=ic.velocity_amplitude, **kw)
    u2 = random_field(grid, rng, amplitude=ic.velocity_amplitude, **kw)
    phi = random_field(grid, rng, amplitude=ic.amplitude, **kw) + ic.m
    fluct = random_field(grid, rng, amplitude=ic.theta_amplitude, **kw)
    theta_bar = ic.theta_bar
    if ic.theta_min is not None:
        theta_bar = max(theta_bar, ic.theta_min - float(fluct.values.min()))
    u = VectorField((u1, u2)) + VectorField.constant(grid, ic.velocity_mean)
    return FlowState.build(u, phi, fluct + theta_bar, potential)


def build_initial(config):
    """Initial :class:`FlowState` for a :class:`~tflow.config.RunConfig`."""
    ic = config.initial
    grid = config.grid
    potential = config.potential
    if ic.kind == "from_snapshot":
        snap = read_snapshot(ic.path)
        if snap.n != grid.n:
            raise ConfigurationError(
                f"snapshot {ic.path} has n={snap.n} but grid.n={grid.n}", key="initial_condition.path"
            )
        return snap.to_state(potential)
    builders = {"constant": _constant_state, "single_mode": _single_mode, "random_bandlimited": _random}
    if ic.kind not in builders:
        raise ConfigurationError(f"unknown initial_condition.kind {ic.kind!r}", key="initial_condition.kind")
    try:
        return builders[ic.kind](grid, ic, potential)
    except PositivityError as exc:
        raise ConfigurationError(
            f"initial temperature is not positive ({exc}); raise initial_condition.theta_bar",
            key="initial_condition.theta_bar",
        ) from exc
