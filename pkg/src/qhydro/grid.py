"""Uniform periodic 1D grid with spectral differentiation and quadrature.

The domain is [-L, L) sampled at N evenly spaced points, so every field is
implicitly 2L-periodic.  Localized fields must decay below roundoff at the
boundary for the spectral operations to be meaningful; all solvers in this
package are set up that way.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "RealField",
    "ComplexField",
    "make_grid",
    "derivative",
    "integrate",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid:
    """Sample points x_j = -L + j*dx and their conjugate wavenumbers.

    Wavenumbers follow FFT ordering; the mode set is symmetric except for
    the unpaired Nyquist mode at index N//2.
    """

    half_width: float
    num_points: int
    dx: float
    x: np.ndarray
    k: np.ndarray

    @property
    def nyquist_index(self) -> int:
        return self.num_points // 2

    def __eq__(self, other) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.num_points == other.num_points
            and self.half_width == other.half_width
            and self.x.dtype == other.x.dtype
        )


def make_grid(L: float, N: int, dtype=np.float64) -> Grid:
    """Build the periodic grid on [-L, L) with N points.

    N must be even and at least 8.  `dtype` selects the working precision
    (np.longdouble is supported for ill-conditioned diagnostics).
    """
    if N % 2 != 0 or N < 8:
        raise ValueError(f"N must be an even integer >= 8, got {N}")
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    L = dtype(L)
    dx = 2 * L / N
    x = -L + dx * np.arange(N, dtype=dtype)
    # integer mode numbers in FFT order: 0..N/2-1, -N/2..-1
    modes = ((np.arange(N) + N // 2) % N) - N // 2
    k = (np.pi / L) * modes.astype(dtype)
    # half_width/dx keep the working dtype so extended-precision grids stay exact
    return Grid(L, N, dx, _frozen(x), _frozen(k))


@dataclass(frozen=True)
class RealField:
    """Real samples on a grid, with an optional validity mask.

    `valid` is None when every point carries a meaningful value.  Operations
    that divide by the density attach a mask; entries at invalid points are
    stored as 0.0 and must be ignored via the mask, not read as values.
    """

    grid: Grid
    values: np.ndarray
    valid: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise TypeError("RealField requires real values")
        if not np.issubdtype(v.dtype, np.floating):
            v = v.astype(np.float64)
        if v.shape != (self.grid.num_points,):
            raise ValueError(f"expected {self.grid.num_points} samples, got shape {v.shape}")
        if self.valid is not None:
            m = np.asarray(self.valid, dtype=bool)
            if m.shape != v.shape:
                raise ValueError("valid mask shape mismatch")
            v = np.where(m, v, v.dtype.type(0))
            object.__setattr__(self, "valid", _frozen(m))
            if not np.all(np.isfinite(v[m])):
                raise ValueError("non-finite values on valid points")
        else:
            if not np.all(np.isfinite(v)):
                raise ValueError("non-finite values in field")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def mask(self) -> np.ndarray:
        if self.valid is None:
            return np.ones(self.grid.num_points, dtype=bool)
        return self.valid


@dataclass(frozen=True)
class ComplexField:
    """Complex samples on a grid (wavefunctions, complex velocities)."""

    grid: Grid
    values: np.ndarray
    valid: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if not np.iscomplexobj(v):
            v = v.astype(np.result_type(v.dtype, np.complex128))
        if v.shape != (self.grid.num_points,):
            raise ValueError(f"expected {self.grid.num_points} samples, got shape {v.shape}")
        if self.valid is not None:
            m = np.asarray(self.valid, dtype=bool)
            if m.shape != v.shape:
                raise ValueError("valid mask shape mismatch")
            v = np.where(m, v, v.dtype.type(0))
            object.__setattr__(self, "valid", _frozen(m))
            if not np.all(np.isfinite(v[m])):
                raise ValueError("non-finite values on valid points")
        else:
            if not np.all(np.isfinite(v)):
                raise ValueError("non-finite values in field")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def mask(self) -> np.ndarray:
        if self.valid is None:
            return np.ones(self.grid.num_points, dtype=bool)
        return self.valid


def spectral_derivative(values: np.ndarray, grid: Grid, order: int = 1) -> np.ndarray:
    """Spectral derivative of a sample array: transform, multiply by (ik)^order, invert.

    Real input yields real output; the sub-1e-12 imaginary residue of the
    round trip is truncated.  The Nyquist mode is zeroed for odd orders so
    that odd derivatives of real fields stay real and symmetric.
    """
    if order < 1:
        raise ValueError("derivative order must be a positive integer")
    mult = (1j * grid.k.astype(np.result_type(grid.k.dtype, np.complex128))) ** order
    if order % 2 == 1:
        mult = mult.copy()
        mult[grid.nyquist_index] = 0.0
    out = np.fft.ifft(mult * np.fft.fft(values))
    if np.iscomplexobj(values):
        return out
    return out.real


def derivative(f, order: int = 1):
    """Spectral d^order/dx^order of a field; returns a field of the same kind."""
    out = spectral_derivative(f.values, f.grid, order)
    if isinstance(f, RealField):
        return RealField(f.grid, out, f.valid)
    return ComplexField(f.grid, out, f.valid)


def integrate(f) -> float | complex:
    """Rectangle-rule integral dx * sum(values).

    Exact for trigonometric polynomials on the periodic grid and spectrally
    accurate for fields that decay below roundoff at the boundary.
    """
    total = f.grid.dx * np.sum(f.values)
    if isinstance(f, ComplexField):
        return complex(total)
    return float(total) if f.values.dtype == np.float64 else total
