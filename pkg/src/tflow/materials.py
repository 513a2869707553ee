"""Configuration potential, heat conductivity and the chemical potential."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ConfigurationError, PositivityError
from .spectral import SPECTRAL, ScalarField, _check_same_grid

QUARTIC_COEFFICIENTS = (0.25, 0.0, -0.5, 0.0, 0.25)


@dataclass(frozen=True)
class PotentialSpec:
    """Polynomial potential ``F(r) = sum_k coefficients[k] r^k``.

    ``kind="quartic"`` is the double well ``(r^2 - 1)^2 / 4`` and ignores
    ``coefficients``.  On construction the assumptions are checked on
    ``check_samples`` points of ``check_range``: ``F'' >= -lam``, ``F >= -c0``
    and ``|F'''| <= C (1 + |r|^(p_F - 1))``; the smallest such ``C`` found is
    kept as ``growth_constant``.
    """

    kind: str = "quartic"
    coefficients: tuple = QUARTIC_COEFFICIENTS
    lam: float = 1.0
    p_F: float = 2.0
    c0: float = 0.0
    check_range: tuple = (-10.0, 10.0)
    check_samples: int = 10_000
    growth_constant: float = field(init=False, default=float("nan"))

    def __post_init__(self):
        if self.kind == "quartic":
            coeffs = QUARTIC_COEFFICIENTS
        elif self.kind == "polynomial":
            coeffs = tuple(float(c) for c in self.coefficients)
        else:
            raise ConfigurationError(f"potential.kind must be 'quartic' or 'polynomial', got {self.kind!r}", key="potential.kind")
        object.__setattr__(self, "coefficients", coeffs)
        problems = []
        if not self.lam >= 0:
            problems.append(("potential.lambda", f"potential.lambda must be >= 0, got {self.lam}"))
        if not self.p_F >= 1:
            problems.append(("potential.p_F", f"potential.p_F must be >= 1, got {self.p_F}"))
        if not self.c0 >= 0:
            problems.append(("potential.c0", f"potential.c0 must be >= 0, got {self.c0}"))
        if problems:
            raise ConfigurationError("; ".join(m for _, m in problems), key=problems[0][0], problems=problems)

        poly = Polynomial(coeffs).trim()
        deg = poly.degree()
        # coercivity: even degree with positive leading coefficient
        if deg < 2 or deg % 2 or poly.coef[-1] <= 0:
            raise ConfigurationError(
                "potential.coefficients must describe an even-degree polynomial with positive leading coefficient",
                key="potential.coefficients",
            )
        derivs = [poly.deriv(k) for k in range(4)]
        object.__setattr__(self, "_polys", derivs)

        r = np.linspace(*self.check_range, self.check_samples)
        worst_convexity = derivs[2](r).min()
        if worst_convexity < -self.lam - 1e-12:
            raise ConfigurationError(
                f"F'' reaches {worst_convexity:.6g} < -lambda = {-self.lam}", key="potential.lambda"
            )
        if derivs[0](r).min() < -self.c0 - 1e-12:
            raise ConfigurationError(f"F drops below -c0 = {-self.c0}", key="potential.c0")
        if deg - 3 > self.p_F - 1:
            raise ConfigurationError(
                f"F''' grows like |r|^{deg - 3}, faster than the declared p_F - 1 = {self.p_F - 1}",
                key="potential.p_F",
            )
        ratio = np.abs(derivs[3](r)) / (1.0 + np.abs(r) ** (self.p_F - 1))
        object.__setattr__(self, "growth_constant", float(ratio.max()))

    def F(self, r):
        return self._polys[0](r)

    def Fprime(self, r):
        return self._polys[1](r)

    def Fsecond(self, r):
        return self._polys[2](r)

    def Fthird(self, r):
        return self._polys[3](r)


def _nonnegative(r):
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise PositivityError(f"conductivity evaluated at negative or NaN temperature (min {np.min(r):.3g})")
    return r


@dataclass(frozen=True)
class ConductivitySpec:
    """``kappa(r) = 1 + r^q`` and its primitive ``K(r) = r + r^(q+1)/(q+1)``."""

    q: float = 2.0

    def __post_init__(self):
        if not self.q >= 2:
            raise ConfigurationError(f"conductivity.q must lie in [2, inf), got {self.q}", key="conductivity.q")

    def kappa(self, r):
        r = _nonnegative(r)
        return 1.0 + r**self.q

    def K(self, r):
        r = _nonnegative(r)
        return r + r ** (self.q + 1) / (self.q + 1)


@dataclass(frozen=True)
class MaterialLaws:
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    conductivity: ConductivitySpec = field(default_factory=ConductivitySpec)


def require_positive(values, what="temperature"):
    low = float(np.min(values))
    if not low > 0:
        raise PositivityError(f"{what} must be positive, minimum on the grid is {low:.6g}")
    return low


def fprime_coeffs(grid, potential, phi_values):
    """Dealiased coefficients of ``F'(phi)`` from point values of ``phi``."""
    return np.where(grid.dealias_mask, grid.forward(potential.Fprime(phi_values)), 0.0)


def chemical_potential(phi, theta, potential):
    """``mu = -Lap phi + F'(phi) - theta`` as a spectral field."""
    _check_same_grid(phi, theta)
    require_positive(theta.values)
    grid = phi.grid
    ph = phi.coeffs
    mu = grid.ksq * ph + fprime_coeffs(grid, potential, phi.values) - theta.coeffs
    return ScalarField(grid, mu, SPECTRAL)
