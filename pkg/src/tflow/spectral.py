"""Periodic grid, Fourier transforms and spectral calculus on the unit torus.

Fields live on ``[0, 1)^2`` sampled at ``n x n`` points with spacing ``1/n``.
Spectral coefficients follow the convention

    v(x) = sum_n c_n exp(2 pi i n . x),

so that ``c_(0,0)`` is the spatial mean.  Real fields only store the
half-spectrum ``n2 >= 0`` (the layout of ``scipy.fft.rfft2``); the remaining
coefficients follow from Hermitian symmetry ``c_(-n) = conj(c_n)``, which the
inverse transform enforces on every trip to physical space.

Array layout is ``data[i1, i2] = v(i1 / n, i2 / n)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, RepresentationError

PHYSICAL = "physical"
SPECTRAL = "spectral"

TWO_PI = 2.0 * np.pi


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


class TorusGrid:
    """Collocation grid, wavenumber tables and dealias mask for one ``n``.

    Use :func:`make_grid` rather than instantiating directly; grids are cached
    and compare equal by resolution.
    """

    def __init__(self, n):
        self.n = int(n)
        n = self.n
        m = n // 2 + 1
        self.spectral_shape = (n, m)

        n1 = np.fft.fftfreq(n, d=1.0 / n).round().astype(np.int64)
        n2 = np.arange(m, dtype=np.int64)
        self.n1 = _frozen(n1[:, None])
        self.n2 = _frozen(n2[None, :])
        self.kx = _frozen(TWO_PI * self.n1)
        self.ky = _frozen(TWO_PI * self.n2)
        # |k|^2 = 4 pi^2 |n|^2, the symbol of -Laplacian
        self.ksq = _frozen(self.kx**2 + self.ky**2)

        # odd derivatives drop the Nyquist row/column to keep real fields real
        kx_eff = np.where(self.n1 == -n // 2, 0.0, self.kx)
        ky_eff = np.where(self.n2 == n // 2, 0.0, self.ky)
        self.kx_eff = _frozen(kx_eff)
        self.ky_eff = _frozen(ky_eff)
        self.ddx = _frozen(1j * kx_eff)
        self.ddy = _frozen(1j * ky_eff)
        self.ksq_eff = _frozen(kx_eff**2 + ky_eff**2)
        with np.errstate(divide="ignore"):
            self.inv_ksq_eff = _frozen(np.where(self.ksq_eff > 0, 1.0 / self.ksq_eff, 0.0))

        cutoff = n / 3.0
        self.dealias_mask = _frozen((np.abs(self.n1) < cutoff) & (self.n2 < cutoff))
        self.max_retained = int(np.ceil(cutoff) - 1)

        w = np.full((1, m), 2.0)
        w[0, 0] = 1.0
        w[0, -1] = 1.0
        self.parseval_weights = _frozen(w)
        self.gradient_weights = _frozen(w * self.ksq_eff)

        x = np.arange(n) / n
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        self.x1 = _frozen(x1)
        self.x2 = _frozen(x2)

    def __repr__(self):
        return f"TorusGrid(n={self.n})"

    def __eq__(self, other):
        return isinstance(other, TorusGrid) and other.n == self.n

    def __hash__(self):
        return hash(("TorusGrid", self.n))

    @property
    def spacing(self):
        return 1.0 / self.n

    @property
    def wavenumbers(self):
        """Integer mode pairs ``(n1, n2)`` of the stored half-spectrum."""
        return np.broadcast_arrays(self.n1, self.n2)

    # raw transforms; leading axes are batched
    def forward(self, values):
        return sfft.rfft2(values, axes=(-2, -1), norm="forward")

    def inverse(self, coeffs):
        return sfft.irfft2(coeffs, s=(self.n, self.n), axes=(-2, -1), norm="forward")

    def mean_square(self, coeffs):
        """``sum_n |c_n|^2`` over the full spectrum (Parseval), batched over leading axes."""
        return np.sum(self.parseval_weights * (coeffs.real**2 + coeffs.imag**2), axis=(-2, -1))


@functools.lru_cache(maxsize=None)
def make_grid(n):
    """Return the (cached) :class:`TorusGrid` with ``n`` points per axis."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise ConfigurationError(f"grid.n must be an integer, got {n!r}", key="grid.n")
    if n < 8 or n % 2:
        raise ConfigurationError(f"grid.n must be even and >= 8, got {n}", key="grid.n")
    return TorusGrid(int(n))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A real scalar field held either as point values or as Fourier coefficients."""

    grid: TorusGrid
    data: np.ndarray
    representation: str

    def __post_init__(self):
        if self.representation == PHYSICAL:
            arr = np.array(self.data, dtype=np.float64)
            expected = (self.grid.n, self.grid.n)
        elif self.representation == SPECTRAL:
            arr = np.array(self.data, dtype=np.complex128)
            expected = self.grid.spectral_shape
        else:
            raise RepresentationError(f"unknown representation {self.representation!r}")
        if arr.shape != expected:
            raise RepresentationError(
                f"{self.representation} data for n={self.grid.n} must have shape {expected}, got {arr.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_physical(cls, grid, values):
        return cls(grid, values, PHYSICAL)

    @classmethod
    def from_spectral(cls, grid, coeffs):
        return cls(grid, coeffs, SPECTRAL)

    @classmethod
    def constant(cls, grid, value):
        c = np.zeros(grid.spectral_shape, dtype=np.complex128)
        c[0, 0] = value
        return cls(grid, c, SPECTRAL)

    @property
    def is_spectral(self):
        return self.representation == SPECTRAL

    def as_spectral(self):
        return self if self.is_spectral else to_spectral(self)

    def as_physical(self):
        return to_physical(self) if self.is_spectral else self

    @property
    def values(self):
        """Point values on the collocation grid."""
        return self.as_physical().data

    @property
    def coeffs(self):
        """Stored half-spectrum coefficients."""
        return self.as_spectral().data

    @property
    def mean(self):
        return float(self.coeffs[0, 0].real)

    def coefficient(self, n1, n2):
        """Coefficient ``c_(n1, n2)`` for any integer mode resolved by the grid."""
        n = self.grid.n
        if not (-n // 2 <= n1 < n // 2 or n1 == n // 2) or abs(n2) > n // 2:
            raise IndexError(f"mode ({n1}, {n2}) not resolved on n={n}")
        c = self.coeffs
        if n2 >= 0:
            return complex(c[n1 % n, n2])
        return complex(np.conj(c[(-n1) % n, -n2]))

    def full_spectrum(self):
        """All ``n x n`` coefficients, indexed like ``numpy.fft.fft2``."""
        return np.fft.fft2(self.values, norm="forward")

    def _binary(self, other, op):
        if isinstance(other, ScalarField):
            _check_same_grid(self, other)
            if self.representation == other.representation:
                return ScalarField(self.grid, op(self.data, other.data), self.representation)
            return ScalarField(self.grid, op(self.coeffs, other.coeffs), SPECTRAL)
        return NotImplemented

    def __add__(self, other):
        if np.isscalar(other):
            return self + ScalarField.constant(self.grid, other)
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            return self + (-other)
        return self._binary(other, np.subtract)

    def __neg__(self):
        return ScalarField(self.grid, -self.data, self.representation)

    def __mul__(self, other):
        if np.isscalar(other):
            return ScalarField(self.grid, self.data * float(other), self.representation)
        return NotImplemented

    __rmul__ = __mul__

    def __repr__(self):
        return f"ScalarField(n={self.grid.n}, {self.representation})"


@dataclass(frozen=True, eq=False)
class VectorField:
    """Two scalar components on the same grid and in the same representation."""

    components: tuple

    def __post_init__(self):
        c1, c2 = self.components
        _check_same_grid(c1, c2)
        if c1.representation != c2.representation:
            c1, c2 = c1.as_spectral(), c2.as_spectral()
        object.__setattr__(self, "components", (c1, c2))

    @classmethod
    def from_physical(cls, grid, values):
        return cls((ScalarField.from_physical(grid, values[0]), ScalarField.from_physical(grid, values[1])))

    @classmethod
    def from_spectral(cls, grid, coeffs):
        return cls((ScalarField.from_spectral(grid, coeffs[0]), ScalarField.from_spectral(grid, coeffs[1])))

    @classmethod
    def constant(cls, grid, value):
        return cls((ScalarField.constant(grid, value[0]), ScalarField.constant(grid, value[1])))

    @property
    def grid(self):
        return self.components[0].grid

    @property
    def representation(self):
        return self.components[0].representation

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def as_spectral(self):
        return VectorField(tuple(c.as_spectral() for c in self.components))

    def as_physical(self):
        return VectorField(tuple(c.as_physical() for c in self.components))

    @property
    def values(self):
        return np.stack([c.values for c in self.components])

    @property
    def coeffs(self):
        return np.stack([c.coeffs for c in self.components])

    @property
    def mean(self):
        return np.array([c.mean for c in self.components])

    def __add__(self, other):
        if isinstance(other, VectorField):
            return VectorField(tuple(a + b for a, b in zip(self, other)))
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, VectorField):
            return VectorField(tuple(a - b for a, b in zip(self, other)))
        return NotImplemented

    def __mul__(self, other):
        if np.isscalar(other):
            return VectorField(tuple(c * other for c in self.components))
        return NotImplemented

    __rmul__ = __mul__


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise RepresentationError(f"fields live on different grids: {a.grid} vs {b.grid}")


def to_spectral(f):
    """Forward transform of a physical field."""
    if f.representation != PHYSICAL:
        raise RepresentationError("to_spectral expects a physical field")
    return ScalarField(f.grid, f.grid.forward(f.data), SPECTRAL)


def to_physical(f):
    """Inverse transform of a spectral field."""
    if f.representation != SPECTRAL:
        raise RepresentationError("to_physical expects a spectral field")
    return ScalarField(f.grid, f.grid.inverse(f.data), PHYSICAL)


def derivative_symbol(grid, multi_index):
    a1, a2 = multi_index
    if a1 < 0 or a2 < 0:
        raise ValueError(f"multi-index must be nonnegative, got {multi_index}")
    sx = grid.ddx if a1 % 2 else 1j * grid.kx
    sy = grid.ddy if a2 % 2 else 1j * grid.ky
    return sx**a1 * sy**a2


def spectral_derivative(f, multi_index):
    """``d^a1/dx1^a1 d^a2/dx2^a2 f``, returned in spectral representation."""
    f = f.as_spectral()
    return ScalarField(f.grid, f.data * derivative_symbol(f.grid, multi_index), SPECTRAL)


def gradient(f):
    return VectorField((spectral_derivative(f, (1, 0)), spectral_derivative(f, (0, 1))))


def divergence(v):
    return spectral_derivative(v[0], (1, 0)) + spectral_derivative(v[1], (0, 1))


def laplacian(f):
    f = f.as_spectral()
    return ScalarField(f.grid, -f.grid.ksq * f.data, SPECTRAL)


def bilaplacian(f):
    f = f.as_spectral()
    return ScalarField(f.grid, f.grid.ksq**2 * f.data, SPECTRAL)


def dealias(f):
    """Zero every mode outside the two-thirds mask."""
    f = f.as_spectral()
    return ScalarField(f.grid, np.where(f.grid.dealias_mask, f.data, 0.0), SPECTRAL)


def leray_coeffs(grid, w1, w2):
    """Divergence-free part of the coefficient pair ``(w1, w2)``; raw-array form."""
    kx, ky = grid.kx_eff, grid.ky_eff
    proj = (kx * w1 + ky * w2) * grid.inv_ksq_eff
    return w1 - kx * proj, w2 - ky * proj


def leray_project(w):
    """Project ``w`` onto divergence-free fields; the mean passes through unchanged."""
    w = w.as_spectral()
    p1, p2 = leray_coeffs(w.grid, w[0].data, w[1].data)
    return VectorField.from_spectral(w.grid, (p1, p2))


def random_field(grid, rng, gamma=1.5, bandwidth=None, amplitude=1.0, mean_free=False):
    """Random real field with complex Gaussian modes decaying like ``(1 + |n|^2)^-gamma``.

    Modes with ``|n| > bandwidth`` are zero (an isotropic cutoff); the default
    bandwidth is the dealias cutoff.  ``amplitude`` rescales the field to that RMS deviation
    from its mean.
    """
    if bandwidth is None:
        bandwidth = grid.max_retained
    shape = grid.spectral_shape
    c = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    c *= (1.0 + grid.n1**2 + grid.n2**2) ** (-gamma)
    keep = grid.n1**2 + grid.n2**2 <= bandwidth**2
    if mean_free:
        keep = keep & ((grid.n1 != 0) | (grid.n2 != 0))
    # a round trip through physical space enforces Hermitian symmetry; masking again clears its round-off
    c = np.where(keep, grid.forward(grid.inverse(np.where(keep, c, 0.0))), 0.0)
    fluct = np.sqrt(grid.mean_square(c) - abs(c[0, 0]) ** 2)
    if fluct > 0:
        c = c * (amplitude / fluct)
    return ScalarField(grid, c, SPECTRAL)
