"""Exact translations on the torus and the Galilean change of frame."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .materials import chemical_potential
from .spectral import SPECTRAL, ScalarField, VectorField
from .state import FlowState


@dataclass(frozen=True)
class FrameSpec:
    """A frame moving with constant velocity ``m``, observed at time ``t``."""

    m: tuple = (0.0, 0.0)
    t: float = 0.0

    def __post_init__(self):
        m = tuple(float(c) for c in self.m)
        if len(m) != 2 or not all(np.isfinite(m)) or not np.isfinite(self.t):
            raise ValueError(f"frame velocity and time must be finite, got m={self.m}, t={self.t}")
        object.__setattr__(self, "m", m)

    @property
    def displacement(self):
        return (self.t * self.m[0], self.t * self.m[1])


def _phase(grid, d):
    # reduce mod 1 first: the phase is periodic and large arguments lose digits
    d1, d2 = (float(c) % 1.0 for c in d)
    n = grid.n
    a1 = 2.0 * np.pi * grid.n1 * d1
    a2 = 2.0 * np.pi * grid.n2 * d2
    # the Nyquist mode of a real field carries a real coefficient, so it only gets cos
    e1 = np.where(grid.n1 == -n // 2, np.cos(a1), np.exp(1j * a1))
    e2 = np.where(grid.n2 == n // 2, np.cos(a2), np.exp(1j * a2))
    return e1 * e2


def shift_field(f, d):
    """Return ``x -> f(x + d)`` by phase multiplication of every mode.

    Exact and invertible for fields without Nyquist content (anything on the
    dealias mask); a Nyquist coefficient can only be scaled by ``cos``.
    """
    f = f.as_spectral()
    return ScalarField(f.grid, f.data * _phase(f.grid, d), SPECTRAL)


def _shift_coeffs(grid, coeffs, d):
    return coeffs * _phase(grid, d)


def to_moving_frame(state, m, potential=None):
    """Observe ``state`` from a frame translating with velocity ``m``.

    Every field is evaluated at ``x + t m`` and the velocity is reduced by
    ``m``, so a state with mean velocity ``m`` comes out with mean zero.  The
    cached ``mu`` is shifted along, or recomputed when ``potential`` is given
    (a pointwise nonlinearity commutes with the shift only up to aliasing).
    """
    m = np.asarray(m, dtype=np.float64)
    grid = state.grid
    ph = _phase(grid, state.t * m)
    uh = state.u.coeffs * ph
    uh[:, 0, 0] -= m
    phi_h, theta_h = state.phi.coeffs * ph, state.theta.coeffs * ph
    if potential is None:
        mu_h = state.mu.coeffs * ph
    else:
        mu_h = chemical_potential(ScalarField(grid, phi_h, SPECTRAL), ScalarField(grid, theta_h, SPECTRAL), potential).data
    return FlowState.from_coeffs(grid, state.t, uh, phi_h, theta_h, mu_h)


def best_fit_shift(target, profile, candidates=None):
    """Displacement ``x0`` minimizing ``|target - shift_field(profile, x0)|`` over a candidate grid.

    The default candidates are the ``n x n`` collocation offsets.  Returns
    ``(x0, misfit)`` with the misfit in the mean-square norm.
    """
    grid = target.grid
    if candidates is None:
        s = np.arange(grid.n) / grid.n
        candidates = [(a, b) for a in s for b in s]
    tc, pc = target.coeffs, profile.coeffs
    best, best_err = None, np.inf
    for d in candidates:
        err = float(np.sqrt(grid.mean_square(tc - _shift_coeffs(grid, pc, d))))
        if err < best_err:
            best, best_err = (float(d[0]), float(d[1])), err
    return best, best_err


def shift_vector(v, d):
    return VectorField((shift_field(v[0], d), shift_field(v[1], d)))
