"""Hydrodynamic decomposition of a wavefunction.

Writing psi = sqrt(rho) * exp(i*S/hbar) turns the wavefunction into fluid
fields: the density rho, the velocity potential per unit mass S/m, the
advective velocity u_a = grad(S/m), and the curvature term known as the
Bohm potential.  The same machinery serves classical densities, where the
drift -D*grad(ln rho) plays the role of a diffusive velocity.

Velocities are always computed from grad(psi)/psi or grad(rho)/rho, never
from the unwrapped phase; unwrapping exists only to report the potential
itself.  Points where rho falls below DENSITY_FLOOR_RATIO * max(rho) are
excluded from every pointwise quantity (logarithms and the Bohm potential
are singular in near-vacuum).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ComplexField, Grid, RealField, integrate, spectral_derivative

__all__ = [
    "DENSITY_FLOOR_RATIO",
    "NORM_TOLERANCE",
    "QuantumState",
    "MadelungFields",
    "UnwrapError",
    "valid_mask",
    "density",
    "complex_velocity",
    "advective_velocity",
    "diffusive_velocity",
    "bohm_potential",
    "diffusive_bohm_potential",
    "diffusive_bohm_force",
    "action_per_mass",
    "decompose",
]

DENSITY_FLOOR_RATIO = 1e-12
NORM_TOLERANCE = 1e-8


class UnwrapError(ValueError):
    """Phase changes faster than the grid resolves; unwrapping is ambiguous."""


@dataclass(frozen=True)
class QuantumState:
    """A normalized wavefunction with its physical constants and clock."""

    psi: ComplexField
    hbar: float = 1.0
    mass: float = 1.0
    time: float = 0.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        norm = integrate(RealField(self.psi.grid, np.abs(self.psi.values) ** 2))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValueError(f"state norm {norm!r} deviates from 1 by more than {NORM_TOLERANCE}")

    @property
    def grid(self) -> Grid:
        return self.psi.grid


@dataclass(frozen=True)
class MadelungFields:
    """All hydrodynamic fields of one state, on a shared validity mask."""

    rho: RealField
    action_per_mass: RealField
    u_advective: RealField
    u_diffusive: RealField
    bohm_potential: RealField
    valid_mask: np.ndarray


def valid_mask(rho: RealField, floor_ratio: float = DENSITY_FLOOR_RATIO) -> np.ndarray:
    """Points where the density is large enough for pointwise diagnostics."""
    peak = rho.values.max()
    if not peak > 0:
        raise ValueError("density is identically zero")
    return (rho.values >= floor_ratio * peak) & rho.mask


def density(state: QuantumState) -> RealField:
    """rho = |psi|^2; defined and nonnegative everywhere."""
    return RealField(state.grid, np.abs(state.psi.values) ** 2)


def _psi_ratios(state: QuantumState, orders=(1,)):
    """grad^n(psi)/psi for the requested orders, zeroed off the valid mask."""
    psi = state.psi.values
    rho = np.abs(psi) ** 2
    mask = (rho >= DENSITY_FLOOR_RATIO * rho.max())
    safe = np.where(mask, psi, 1.0)
    out = []
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        for n in orders:
            dn = spectral_derivative(psi, state.grid, n)
            out.append(np.where(mask, dn / safe, 0.0))
    return mask, out


def complex_velocity(state: QuantumState) -> ComplexField:
    """v = -i (hbar/m) grad(psi)/psi.

    The real part is the advective velocity u_a, the imaginary part is the
    diffusive velocity -(hbar/2m) grad(ln rho).  Masked points are marked
    invalid and excluded from diagnostics.
    """
    mask, (ratio,) = _psi_ratios(state)
    if not mask.any():
        raise ValueError("density below the floor everywhere; no valid points")
    v = -1j * (state.hbar / state.mass) * ratio
    return ComplexField(state.grid, v, mask)


def advective_velocity(state: QuantumState) -> RealField:
    """u_a = grad(S/m), taken as the real part of the complex velocity."""
    v = complex_velocity(state)
    return RealField(state.grid, v.values.real, v.valid)


def diffusive_velocity(rho: RealField, D: float) -> RealField:
    """Fick's-law drift u_d = -D grad(ln rho), via grad(rho)/rho."""
    if not D > 0:
        raise ValueError(f"diffusivity must be positive, got {D}")
    if rho.values.min() < 0:
        raise ValueError("density must be nonnegative")
    mask = valid_mask(rho)
    if not mask.any():
        raise ValueError("density below the floor everywhere; no valid points")
    grad = spectral_derivative(rho.values, rho.grid)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(mask, -D * grad / np.where(mask, rho.values, 1.0), 0.0)
    return RealField(rho.grid, u, mask)


def _sqrt_curvature(rho: RealField) -> tuple[np.ndarray, np.ndarray]:
    """laplacian(sqrt(rho)) / sqrt(rho) with sqrt taken pointwise."""
    if rho.values.min() < 0:
        raise ValueError("density must be nonnegative")
    mask = valid_mask(rho)
    if not mask.any():
        raise ValueError("density below the floor everywhere; no valid points")
    a = np.sqrt(rho.values)
    lap = spectral_derivative(a, rho.grid, 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        curv = np.where(mask, lap / np.where(mask, a, 1.0), 0.0)
    return mask, curv


def bohm_potential(rho: RealField, hbar: float = 1.0, mass: float = 1.0) -> RealField:
    """Q/m = -(hbar^2 / 2 m^2) laplacian(sqrt(rho)) / sqrt(rho)."""
    mask, curv = _sqrt_curvature(rho)
    return RealField(rho.grid, -(hbar**2 / (2 * mass**2)) * curv, mask)


def diffusive_bohm_potential(rho: RealField, D: float) -> RealField:
    """-2 D^2 laplacian(sqrt(rho)) / sqrt(rho).

    Coincides pointwise with the quantum Bohm potential when D = hbar/2m.
    """
    if not D > 0:
        raise ValueError(f"diffusivity must be positive, got {D}")
    mask, curv = _sqrt_curvature(rho)
    return RealField(rho.grid, -2.0 * D * D * curv, mask)


def _log_density_ratios(rho: RealField, orders=(1, 2, 3)):
    """grad^n(rho)/rho for the requested orders, zeroed off the valid mask.

    Combining these pointwise keeps deep-tail points usable: spectral
    derivatives of sqrt(rho) are poisoned globally once the density tail
    reaches the additive roundoff floor (the square root turns that floor
    into kinks), while rho itself stays smooth.
    """
    mask = valid_mask(rho)
    safe = np.where(mask, rho.values, 1.0)
    out = []
    with np.errstate(invalid="ignore", divide="ignore"):
        for n in orders:
            out.append(np.where(mask, spectral_derivative(rho.values, rho.grid, n) / safe, 0.0))
    return mask, out


def diffusive_bohm_force(rho: RealField, D: float) -> RealField:
    """Gradient of the diffusive Bohm potential, formed from density ratios.

    With r_n = grad^n(rho)/rho the curvature is h = r2/2 - r1^2/4 and
    grad(-2 D^2 h) = -2 D^2 [ (r3 - r2 r1)/2 - r1 (r2 - r1^2)/2 ].
    """
    if not D > 0:
        raise ValueError(f"diffusivity must be positive, got {D}")
    mask, (r1, r2, r3) = _log_density_ratios(rho)
    if not mask.any():
        raise ValueError("density below the floor everywhere; no valid points")
    h_prime = 0.5 * (r3 - r2 * r1) - 0.5 * r1 * (r2 - r1 * r1)
    return RealField(rho.grid, -2.0 * D * D * h_prime, mask)


def action_per_mass(state: QuantumState) -> RealField:
    """S/m, phase-unwrapped along the grid from x = -L, up to a constant.

    Raises UnwrapError when the finite-difference gradient of the result
    disagrees grossly with u_a, which signals a phase jump beyond pi between
    adjacent points (under-resolution).
    """
    rho = np.abs(state.psi.values) ** 2
    mask = rho >= DENSITY_FLOOR_RATIO * rho.max()
    if not mask.any():
        raise ValueError("density below the floor everywhere; no valid points")
    phase = np.angle(state.psi.values[mask])
    unwrapped = np.unwrap(phase)
    scale = state.hbar / state.mass
    s_tilde = np.zeros_like(rho)
    s_tilde[mask] = scale * unwrapped

    u_a = advective_velocity(state)
    idx = np.flatnonzero(mask)
    if idx.size >= 3:
        grad = np.gradient(s_tilde[idx], state.grid.x[idx], edge_order=2)
        slip = np.pi * scale / state.grid.dx
        mismatch = np.abs(grad - u_a.values[idx]).max()
        if mismatch > 0.5 * slip:
            raise UnwrapError(
                f"gradient of unwrapped phase misses u_a by {mismatch:.3g} "
                f"(branch-slip scale {slip:.3g}); refine the grid"
            )
    return RealField(state.grid, s_tilde, mask)


def decompose(state: QuantumState) -> MadelungFields:
    """All hydrodynamic fields of one state; u_diffusive uses D = hbar/2m."""
    rho = density(state)
    v = complex_velocity(state)
    mask = v.mask
    u_a = RealField(state.grid, v.values.real, mask)
    u_d = diffusive_velocity(rho, state.hbar / (2 * state.mass))
    q = bohm_potential(rho, state.hbar, state.mass)
    s = action_per_mass(state)
    return MadelungFields(rho, s, u_a, u_d, q, mask)
