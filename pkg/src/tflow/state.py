"""The solution triple (u, phi, theta) with its cached chemical potential."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import RepresentationError
from .materials import chemical_potential, fprime_coeffs, require_positive
from .spectral import SPECTRAL, ScalarField, VectorField, leray_project


@dataclass(frozen=True, eq=False)
class FlowState:
    """State at time ``t``; all fields are kept in spectral representation.

    ``mu`` must equal ``chemical_potential(phi, theta)`` for the potential the
    state is evolved with.  Use :meth:`build` to get it computed.
    """

    t: float
    u: VectorField
    phi: ScalarField
    theta: ScalarField
    mu: ScalarField

    def __post_init__(self):
        grid = self.phi.grid
        for f in (self.u[0], self.u[1], self.theta, self.mu):
            if f.grid != grid:
                raise RepresentationError("all state fields must live on the same grid")
        object.__setattr__(self, "u", self.u.as_spectral())
        object.__setattr__(self, "phi", self.phi.as_spectral())
        object.__setattr__(self, "theta", self.theta.as_spectral())
        object.__setattr__(self, "mu", self.mu.as_spectral())

    @classmethod
    def build(cls, u, phi, theta, potential, t=0.0, project=True):
        """Assemble a state from fields (any representation), computing ``mu``.

        With ``project`` the velocity is Leray-projected first, so arbitrary
        vector fields are accepted.
        """
        u = leray_project(u) if project else u.as_spectral()
        phi = phi.as_spectral()
        theta = theta.as_spectral()
        return cls(float(t), u, phi, theta, chemical_potential(phi, theta, potential))

    @classmethod
    def constant(cls, grid, velocity, phi_mean, theta_mean, potential, t=0.0):
        return cls.build(
            VectorField.constant(grid, velocity),
            ScalarField.constant(grid, phi_mean),
            ScalarField.constant(grid, theta_mean),
            potential,
            t=t,
        )

    @classmethod
    def from_coeffs(cls, grid, t, u_hat, phi_hat, theta_hat, mu_hat):
        return cls(
            float(t),
            VectorField.from_spectral(grid, u_hat),
            ScalarField(grid, phi_hat, SPECTRAL),
            ScalarField(grid, theta_hat, SPECTRAL),
            ScalarField(grid, mu_hat, SPECTRAL),
        )

    @property
    def grid(self):
        return self.phi.grid

    def with_time(self, t):
        return replace(self, t=float(t))

    def check(self, potential=None, rtol=1e-13):
        """Raise if an invariant is violated; returns the divergence ratio and min theta."""
        grid = self.grid
        uh = self.u.coeffs
        div = grid.ddx * uh[0] + grid.ddy * uh[1]
        scale = max(np.sqrt(grid.mean_square(uh).sum()) * grid.n, 1.0)
        ratio = float(np.abs(div).max() / scale)
        if ratio > rtol:
            raise AssertionError(f"velocity divergence {ratio:.3g} exceeds {rtol:g} relative")
        low = require_positive(self.theta.values)
        if potential is not None:
            mu = grid.ksq * self.phi.coeffs + fprime_coeffs(grid, potential, self.phi.values) - self.theta.coeffs
            if not np.allclose(mu, self.mu.coeffs, rtol=1e-12, atol=1e-12):
                raise AssertionError("cached mu is stale")
        return ratio, low
