"""Closed-form and ODE reference solutions for Gaussian scenarios.

Everything here is independent of the spectral solvers and serves as the
oracle side of the comparisons: free-particle spreading, the harmonic width
equation, the similarity solution of diffusion, and the uncertainty-type
product between diffusivity and mass.

The harmonic width equation is integrated in the form

    sigma * sigma'' = omega0^2 (sigma0^2 - sigma^2),  sigma0^2 = hbar/(2 m omega0)

whose linearization about sigma0 oscillates at sqrt(2)*omega0.  Note that
this model is not the width dynamics of the Schrodinger evolution itself
(a Gaussian breathing in a harmonic trap oscillates at 2*omega0); the CLI
emits both so the difference is visible in the reports.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "GaussianParams",
    "SigmaTrace",
    "DiffusionReference",
    "UncertaintyProduct",
    "free_sigma",
    "free_entropy",
    "free_divergence",
    "harmonic_ground_width",
    "harmonic_sigma",
    "harmonic_entropy_linearized",
    "harmonic_production_linearized",
    "gaussian_action",
    "diffusion_reference",
    "uncertainty_relation",
]


@dataclass(frozen=True)
class GaussianParams:
    """Parameters of the Gaussian reference family."""

    sigma0: float
    hbar: float = 1.0
    mass: float = 1.0
    omega0: float | None = None
    D: float | None = None
    epsilon0: float | None = None

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be positive")
        if self.omega0 is not None and not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.D is not None and not self.D > 0:
            raise ValueError(f"D must be positive, got {self.D}")
        if self.epsilon0 is not None and abs(self.epsilon0) / self.sigma0 >= 0.05:
            raise ValueError("linearized branch needs |epsilon0|/sigma0 < 0.05")


@dataclass(frozen=True)
class SigmaTrace:
    """Width history sigma(t) with its logarithmic rate."""

    times: np.ndarray
    sigma: np.ndarray
    dlnsigma_dt: np.ndarray

    def __post_init__(self):
        if not np.all(self.sigma > 0):
            raise ValueError("sigma must stay positive along the trace")


def entropy_of_width(sigma: float, k_B: float = 1.0):
    """Boltzmann entropy of a normalized Gaussian: k_B ln(sigma sqrt(2 pi e))."""
    return k_B * np.log(sigma * np.sqrt(2 * np.pi * np.e))


def free_sigma(p: GaussianParams, t: float) -> float:
    """Free-particle width: sigma^2 = sigma0^2 + (hbar t / 2 m sigma0)^2."""
    return float(np.sqrt(p.sigma0**2 + (p.hbar * t / (2 * p.mass * p.sigma0)) ** 2))


def free_entropy(p: GaussianParams, t: float, k_B: float = 1.0) -> float:
    """Entropy of the spreading packet, referenced to its t=0 value."""
    ratio = p.hbar * t / (2 * p.mass * p.sigma0**2)
    return float(entropy_of_width(p.sigma0, k_B) + 0.5 * k_B * np.log1p(ratio**2))


def free_divergence(p: GaussianParams, t: float) -> float:
    """Expansion rate <div u_a> = t / ((2 m sigma0^2 / hbar)^2 + t^2)."""
    tau = 2 * p.mass * p.sigma0**2 / p.hbar
    return float(t / (tau**2 + t**2))


def harmonic_ground_width(p: GaussianParams) -> float:
    """Stationary width sigma0 with sigma0^2 = hbar / (2 m omega0)."""
    if p.omega0 is None:
        raise ValueError("omega0 is required for the harmonic branch")
    return math.sqrt(p.hbar / (2 * p.mass * p.omega0))


def harmonic_sigma(
    p: GaussianParams,
    t_grid: np.ndarray,
    sigma_init: float | None = None,
    dsigma_init: float = 0.0,
) -> SigmaTrace:
    """Integrate the harmonic width equation with fixed-step RK4.

    Initial conditions default to sigma(0) = sigma0 + epsilon0 (epsilon0
    taken as 0 when absent) and sigma'(0) = 0.  The step is
    min(t_grid spacing, 1/(50 omega0)), kept fixed for reproducibility.
    Aborts if sigma is driven to zero or below (unphysical width).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 2:
        raise ValueError("t_grid must contain at least two times")
    dt_grid = np.diff(t_grid)
    if np.any(dt_grid <= 0):
        raise ValueError("t_grid must be strictly increasing")
    # tolerate the ulp-level jitter of arange/linspace grids
    if not np.allclose(dt_grid, dt_grid.mean(), rtol=1e-9, atol=0):
        raise ValueError("t_grid must be uniform")
    w0 = p.omega0
    if w0 is None:
        raise ValueError("omega0 is required for the harmonic branch")
    s0 = harmonic_ground_width(p)
    if abs(p.sigma0 - s0) > 1e-9 * s0:
        raise ValueError(
            f"sigma0={p.sigma0} is inconsistent with the ground width {s0} set by omega0"
        )
    if sigma_init is None:
        sigma_init = s0 + (p.epsilon0 or 0.0)

    dt = float(dt_grid.mean())
    substeps = max(1, math.ceil(dt / (1.0 / (50.0 * w0))))
    h = dt / substeps

    def rhs(s, v):
        return v, w0**2 * (s0**2 - s**2) / s

    sig, vel = float(sigma_init), float(dsigma_init)
    sigmas = [sig]
    rates = [vel / sig]
    for _ in range(len(t_grid) - 1):
        for _ in range(substeps):
            k1 = rhs(sig, vel)
            k2 = rhs(sig + 0.5 * h * k1[0], vel + 0.5 * h * k1[1])
            k3 = rhs(sig + 0.5 * h * k2[0], vel + 0.5 * h * k2[1])
            k4 = rhs(sig + h * k3[0], vel + h * k3[1])
            sig += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            vel += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            if sig <= 0:
                raise ValueError("width collapsed to zero during integration")
        sigmas.append(sig)
        rates.append(vel / sig)
    return SigmaTrace(t_grid.copy(), np.array(sigmas), np.array(rates))


def harmonic_entropy_linearized(p: GaussianParams, t: float, k_B: float = 1.0) -> float:
    """Ent0 + k_B (epsilon0/sigma0) cos(sqrt(2) omega0 t) for small epsilon0."""
    if p.omega0 is None or p.epsilon0 is None:
        raise ValueError("omega0 and epsilon0 are required for the linearized branch")
    s0 = harmonic_ground_width(p)
    return float(entropy_of_width(s0, k_B) + k_B * (p.epsilon0 / s0) * np.cos(np.sqrt(2) * p.omega0 * t))


def harmonic_production_linearized(p: GaussianParams, t: float, k_B: float = 1.0) -> float:
    """Companion rate -k_B (sqrt(2) omega0 epsilon0 / sigma0) sin(sqrt(2) omega0 t)."""
    if p.omega0 is None or p.epsilon0 is None:
        raise ValueError("omega0 and epsilon0 are required for the linearized branch")
    s0 = harmonic_ground_width(p)
    w = np.sqrt(2) * p.omega0
    return float(-k_B * (w * p.epsilon0 / s0) * np.sin(w * t))


def gaussian_action(p: GaussianParams, trace: SigmaTrace, x, t: float):
    """Velocity potential per unit mass of the Gaussian family.

    S/m = (x^2/2) dln(sigma)/dt + f(t) with
    f(t) = -(hbar/2m)^2 * integral_{t0}^{t} dt'/sigma^2 accumulated by the
    trapezoid rule along the trace; the additive constant is fixed by
    f(t0) = 0.
    """
    times = trace.times
    if t < times[0] or t > times[-1]:
        raise ValueError(f"t={t} lies outside the trace range [{times[0]}, {times[-1]}]")
    rate = np.interp(t, times, trace.dlnsigma_dt)
    inv_s2 = 1.0 / trace.sigma**2
    cumulative = np.concatenate(
        [[0.0], np.cumsum(0.5 * (inv_s2[1:] + inv_s2[:-1]) * np.diff(times))]
    )
    f_t = -((p.hbar / (2 * p.mass)) ** 2) * np.interp(t, times, cumulative)
    return np.asarray(x) ** 2 / 2 * rate + f_t


class DiffusionReference(NamedTuple):
    sigma: float
    u_d: Callable
    production: float
    acceleration: Callable


def diffusion_reference(p: GaussianParams, t: float, branch: str = "similarity") -> DiffusionReference:
    """Reference fields of the diffusing Gaussian.

    branch "similarity": sigma^2 = 2 D t (t > 0), the self-similar spreading
    solution with u_d = x/2t, production 1/2t, acceleration -x/4t^2.
    branch "offset": sigma^2 = sigma0^2 + 2 D t (t >= 0), which avoids the
    t=0 singularity;  all fields generalize with sigma^2(t) in place of 2Dt.
    """
    if p.D is None:
        raise ValueError("D is required for the diffusion branch")
    D = p.D
    if branch == "similarity":
        if not t > 0:
            raise ValueError("the similarity branch is singular at t <= 0")
        s2 = 2 * D * t
    elif branch == "offset":
        if t < 0:
            raise ValueError("t must be nonnegative on the offset branch")
        s2 = p.sigma0**2 + 2 * D * t
    else:
        raise ValueError(f"unknown branch {branch!r}")

    def u_d(x):
        return D * np.asarray(x) / s2

    def acceleration(x):
        return -(D**2) * np.asarray(x) / s2**2

    return DiffusionReference(
        sigma=math.sqrt(s2), u_d=u_d, production=D / s2, acceleration=acceleration
    )


class UncertaintyProduct(NamedTuple):
    lx_px: float
    is_bound: bool


def uncertainty_relation(D: float, mass: float, hbar: float) -> UncertaintyProduct:
    """Mean-free-path times Brownian-momentum product l_x p_x = m D.

    Reports whether the product sits exactly on hbar/2, which happens iff
    D = hbar/2m (the diffusivity that identifies the imaginary velocity with
    a Fickian drift).
    """
    if not (D > 0 and mass > 0 and hbar > 0):
        raise ValueError("D, mass and hbar must be positive")
    product = mass * D
    bound = hbar / 2.0
    return UncertaintyProduct(product, math.isclose(product, bound, rel_tol=1e-12, abs_tol=0.0))
