"""qhydro: quantum hydrodynamics and classical diffusion on a 1D spectral grid.

Evolves wavefunctions (split-step spectral) and diffusing densities (exact
heat kernel), decomposes states into Madelung fluid fields, and measures the
entropy functionals and production identities that connect the two flows.
"""
from .grid import ComplexField, Grid, RealField, derivative, integrate, make_grid
from .madelung import (
    MadelungFields,
    QuantumState,
    UnwrapError,
    action_per_mass,
    advective_velocity,
    bohm_potential,
    complex_velocity,
    decompose,
    density,
    diffusive_bohm_force,
    diffusive_bohm_potential,
    diffusive_velocity,
    valid_mask,
)
from .schrodinger import (
    EvolutionConfig,
    NumericsError,
    Potential,
    energy,
    evolve,
    free_potential,
    gaussian_packet,
    harmonic_potential,
    plane_wave,
    step,
    superposition,
    tabulated_potential,
)
from .diffusion import (
    DiffusionState,
    diffuse_step,
    diffusive_acceleration,
    entropy_equation_residual,
    fokker_planck_residual,
    gaussian_density,
)
from .entropy import (
    EntropyReport,
    boltzmann_entropy,
    entropy_report,
    fisher_information,
    production_advective,
    production_correlation,
    production_diffusive,
    von_neumann_entropy,
)
from .analytic import (
    DiffusionReference,
    GaussianParams,
    SigmaTrace,
    UncertaintyProduct,
    diffusion_reference,
    free_divergence,
    free_entropy,
    free_sigma,
    gaussian_action,
    harmonic_entropy_linearized,
    harmonic_ground_width,
    harmonic_production_linearized,
    harmonic_sigma,
    uncertainty_relation,
)
from .traces import centered_difference, dominant_mode

__version__ = "0.1.0"
