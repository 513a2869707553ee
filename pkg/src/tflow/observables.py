"""Diagnostics of flow states and trajectories.

L^p quantities are collocation-grid averages (the torus has unit area);
Sobolev quantities use exact spectral multipliers ``(1 + 4 pi^2 |n|^2)^s``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np

from .materials import fprime_coeffs, require_positive
from .spectral import ScalarField, VectorField

CSV_COLUMNS = (
    "t", "energy_E", "mass_phi", "momentum_u1", "momentum_u2", "mean_theta", "entropy",
    "entropy_production_rate", "diss_u", "diss_theta", "diss_mu", "neg_moment_2",
    "norm_u_H1r", "norm_phi_H3", "norm_theta_V", "norm_Ktheta_V", "norm_invtheta_L1",
    "stationary_residual", "mu_mean",
)


def _weighted_sq(grid, coeffs, s):
    return np.sum(grid.parseval_weights * (1.0 + grid.ksq) ** s * np.abs(coeffs) ** 2, axis=(-2, -1))


def _grad_sq(grid, coeffs):
    """``||grad f||^2`` from coefficients (summed over any leading axes)."""
    return float(np.sum(grid.gradient_weights * (coeffs.real**2 + coeffs.imag**2)))


def sobolev_norm(f, s):
    """``(sum_n (1 + 4 pi^2 |n|^2)^s |c_n|^2)^(1/2)``; vector fields sum their components."""
    if s < 0:
        raise ValueError(f"Sobolev index must be >= 0, got {s}")
    return float(np.sqrt(np.sum(_weighted_sq(f.grid, f.coeffs, s))))


def dual_norm_Vprime(f):
    """Norm of ``f`` in the dual of the H^1 space under the multiplier ``1 / (1 + 4 pi^2 |n|^2)``."""
    return sobolev_norm_negative(f, 1.0)


def sobolev_norm_negative(f, s):
    grid = f.grid
    return float(np.sqrt(np.sum(grid.parseval_weights * (1.0 + grid.ksq) ** (-s) * np.abs(f.coeffs) ** 2)))


def lp_norm(values, p):
    """Grid-average L^p norm; ``p = inf`` gives the grid maximum of ``|values|``."""
    a = np.abs(values)
    if math.isinf(p):
        return float(a.max())
    return float(np.mean(a**p) ** (1.0 / p))


def total_energy(state, laws):
    """Kinetic + interfacial + configuration + thermal energy."""
    grid = state.grid
    u = state.u.values
    kinetic = 0.5 * np.mean(u[0] ** 2 + u[1] ** 2)
    interfacial = 0.5 * _grad_sq(grid, state.phi.coeffs)
    config = np.mean(laws.potential.F(state.phi.values))
    return float(kinetic + interfacial + config + state.theta.mean)


def conserved_triple(state, laws):
    """Mean velocity, mean order parameter and total energy of ``state``."""
    mom = state.u.mean
    return (float(mom[0]), float(mom[1])), state.phi.mean, total_energy(state, laws)


class EntropyBalance(NamedTuple):
    entropy: float
    production_rate: float
    # (d/dt of -int log theta) + production over the last interval; None without a previous record
    balance_defect: Optional[float]


def _physical_gradients(grid, coeffs):
    return grid.inverse(np.stack([grid.ddx * coeffs, grid.ddy * coeffs]))


def entropy_and_production(state, laws, prev_record=None):
    """``int log theta`` and the production rate ``int (|grad u|^2 + |grad mu|^2)/theta + kappa |grad theta|^2/theta^2``."""
    grid = state.grid
    theta = state.theta.values
    require_positive(theta)
    uh = state.u.coeffs
    gu = grid.inverse(np.stack([grid.ddx * uh[0], grid.ddy * uh[0], grid.ddx * uh[1], grid.ddy * uh[1]]))
    gm = _physical_gradients(grid, state.mu.coeffs)
    gt = _physical_gradients(grid, state.theta.coeffs)
    kappa = laws.conductivity.kappa(theta)
    density = (np.sum(gu**2, axis=0) + np.sum(gm**2, axis=0)) / theta + kappa * np.sum(gt**2, axis=0) / theta**2
    entropy = float(np.mean(np.log(theta)))
    rate = float(np.mean(density))
    defect = None
    if prev_record is not None and state.t > prev_record.t:
        dt = state.t - prev_record.t
        defect = (prev_record.entropy - entropy) / dt + 0.5 * (rate + prev_record.entropy_production_rate)
    return EntropyBalance(entropy, rate, defect)


def negative_moment(state, alpha=2.0):
    """``int theta^(1 - alpha)`` for ``alpha > 1``."""
    if not alpha > 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    theta = state.theta.values
    require_positive(theta)
    return float(np.mean(theta ** (1.0 - alpha)))


def _vector_diff_norm(a, b, s):
    return sobolev_norm(VectorField((a[0] - b[0], a[1] - b[1])), s)


def dist_H(z1, z2):
    """Energy-entropy distance: ``|u| + |phi|_V + |theta|_L1 + |log theta|_L1`` of the differences."""
    t1, t2 = z1.theta.values, z2.theta.values
    require_positive(t1)
    require_positive(t2)
    return (
        _vector_diff_norm(z1.u, z2.u, 0)
        + sobolev_norm(z1.phi - z2.phi, 1)
        + float(np.mean(np.abs(t1 - t2)))
        + float(np.mean(np.abs(np.log(t1) - np.log(t2))))
    )


def dist_Vr(z1, z2, laws, r=0.5):
    """Distance of the regular phase space with velocity regularity ``1 + r``."""
    grid = z1.grid
    t1, t2 = z1.theta.values, z2.theta.values
    require_positive(t1)
    require_positive(t2)
    cond = laws.conductivity
    dK = ScalarField.from_physical(grid, cond.K(t1) - cond.K(t2))
    return (
        _vector_diff_norm(z1.u, z2.u, 1 + r)
        + sobolev_norm(z1.phi - z2.phi, 3)
        + sobolev_norm(dK, 1)
        + float(np.mean(np.abs(1.0 / t1 - 1.0 / t2)))
    )


def magnitude_W(z):
    """``|u|_H2 + |phi|_H4 + |theta|_H2 + |1/theta|_L4 + |grad(1/theta)|_L1``."""
    grid = z.grid
    theta = z.theta.values
    require_positive(theta)
    inv = 1.0 / theta
    inv_hat = np.where(grid.dealias_mask, grid.forward(inv), 0.0)
    g1, g2 = _physical_gradients(grid, inv_hat)
    return (
        sobolev_norm(z.u, 2)
        + sobolev_norm(z.phi, 4)
        + sobolev_norm(z.theta, 2)
        + lp_norm(inv, 4)
        + float(np.mean(np.hypot(g1, g2)))
    )


@dataclass(frozen=True)
class StationaryResidual:
    grad_u: float
    grad_theta: float
    grad_mu: float
    consistency: float
    reduced: float

    @property
    def total(self):
        return self.grad_u + self.grad_theta + self.grad_mu + self.consistency + self.reduced


def residual_parts(state, laws):
    """Each term of the stationary residual separately."""
    grid = state.grid
    ph, th, mh = state.phi.coeffs, state.theta.coeffs, state.mu.coeffs
    fp = fprime_coeffs(grid, laws.potential, state.phi.values)
    reduced = grid.ksq * ph + fp
    reduced[0, 0] = 0.0
    consistency = reduced - th - mh
    consistency[0, 0] = 0.0
    return StationaryResidual(
        grad_u=math.sqrt(_grad_sq(grid, state.u.coeffs)),
        grad_theta=math.sqrt(_grad_sq(grid, th)),
        grad_mu=math.sqrt(_grad_sq(grid, mh)),
        consistency=math.sqrt(float(grid.mean_square(consistency))),
        reduced=math.sqrt(float(grid.mean_square(reduced))),
    )


def stationary_residual(state, laws):
    """Distance of ``state`` from the constant-(u, mu, theta) stationary class."""
    return residual_parts(state, laws).total


def gradient_K_gap(state, laws):
    """``(||grad K(theta)||^2, ||grad theta||^2)``; the first always dominates since kappa >= 1."""
    grid = state.grid
    K = laws.conductivity.K(state.theta.values)
    return _grad_sq(grid, grid.forward(K)), _grad_sq(grid, state.theta.coeffs)


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    energy_E: float
    mass_phi: float
    momentum_u: tuple
    mean_theta: float
    entropy: float
    entropy_production_rate: float
    diss_u: float
    diss_theta: float
    diss_mu: float
    neg_moment_alpha: float
    norm_u_H1r: float
    norm_phi_H3: float
    norm_theta_V: float
    norm_Ktheta_V: float
    norm_invtheta_L1: float
    stationary_residual: float
    mu_mean: float
    grad_u: float
    grad_theta: float
    grad_mu: float
    reduced_residual: float

    def csv_row(self):
        d = asdict(self)
        u1, u2 = d.pop("momentum_u")
        d["momentum_u1"], d["momentum_u2"] = u1, u2
        d["neg_moment_2"] = d.pop("neg_moment_alpha")
        return [d[c] for c in CSV_COLUMNS]


class DiagnosticTracker:
    """Builds :class:`ObservableRecord` rows and integrates the dissipation in time.

    :meth:`advance` must be fed every accepted step (coefficients of the new
    state), so the running integrals use the trapezoid rule at the step size.
    """

    def __init__(self, laws, r=0.5, alpha=2.0):
        self.laws = laws
        self.r = r
        self.alpha = alpha
        self.diss = np.zeros(3)
        self._last = None

    def _rates(self, grid, uh, th, mh):
        return np.array([_grad_sq(grid, uh), _grad_sq(grid, th), _grad_sq(grid, mh)])

    def start(self, grid, prepared):
        p = prepared
        self.grid = grid
        self.diss[:] = 0.0
        self._last = (p.t, self._rates(grid, p.uh, p.th, p.mh))

    def advance(self, prepared):
        p = prepared
        rates = self._rates(self.grid, p.uh, p.th, p.mh)
        t0, r0 = self._last
        self.diss += 0.5 * (p.t - t0) * (r0 + rates)
        self._last = (p.t, rates)

    def record(self, state):
        laws = self.laws
        grid = state.grid
        ent = entropy_and_production(state, laws)
        theta = state.theta.values
        K = ScalarField.from_physical(grid, laws.conductivity.K(theta))
        parts = residual_parts(state, laws)
        mom = state.u.mean
        return ObservableRecord(
            t=float(state.t),
            energy_E=total_energy(state, laws),
            mass_phi=state.phi.mean,
            momentum_u=(float(mom[0]), float(mom[1])),
            mean_theta=state.theta.mean,
            entropy=ent.entropy,
            entropy_production_rate=ent.production_rate,
            diss_u=float(self.diss[0]),
            diss_theta=float(self.diss[1]),
            diss_mu=float(self.diss[2]),
            neg_moment_alpha=negative_moment(state, self.alpha),
            norm_u_H1r=sobolev_norm(state.u, 1 + self.r),
            norm_phi_H3=sobolev_norm(state.phi, 3),
            norm_theta_V=sobolev_norm(state.theta, 1),
            norm_Ktheta_V=sobolev_norm(K, 1),
            norm_invtheta_L1=float(np.mean(1.0 / theta)),
            stationary_residual=parts.total,
            mu_mean=state.mu.mean,
            grad_u=parts.grad_u,
            grad_theta=parts.grad_theta,
            grad_mu=parts.grad_mu,
            reduced_residual=parts.reduced,
        )


@dataclass(frozen=True)
class OmegaLimitVerdict:
    converged: bool
    theta_inf: float
    mu_inf: float
    grad_u: float
    grad_theta: float
    grad_mu: float
    reduced_residual: float
    t: float
    jensen_R: float
    jensen_bound: float
    jensen_ok: bool


def omega_limit_detect(series, tol=1e-6, window=50, jensen_slack=1e-6):
    """Decide whether a record series has settled onto a constant-(u, mu, theta) state.

    Converged means the last ``window`` records all have gradient norms of
    ``u``, ``theta`` and ``mu`` within ``tol`` and a reduced residual within
    ``10 tol``.  The lower bound ``theta_inf >= exp(-R)``, with ``R`` the mean
    of ``-log theta`` of the first record, is evaluated either way.
    """
    if not series:
        raise ValueError("omega-limit detection needs at least one record")
    last = series[-1]
    R = -series[0].entropy
    bound = math.exp(-R)
    tail = series[-window:] if window > 0 else []
    converged = len(series) >= window and all(
        r.grad_u <= tol and r.grad_theta <= tol and r.grad_mu <= tol and r.reduced_residual <= 10 * tol
        for r in tail
    )
    return OmegaLimitVerdict(
        converged=bool(converged),
        theta_inf=last.mean_theta,
        mu_inf=last.mu_mean,
        grad_u=last.grad_u,
        grad_theta=last.grad_theta,
        grad_mu=last.grad_mu,
        reduced_residual=last.reduced_residual,
        t=last.t,
        jensen_R=R,
        jensen_bound=bound,
        jensen_ok=bool(last.mean_theta >= bound * (1.0 - jensen_slack)),
    )
