"""Preconditioned solvers for the Ohta-Kawasaki convex-splitting scheme."""

from ._okpc import (
    AlphaStrategy,
    ConfigError,
    Error,
    Mesh,
    Params,
    PrecondConfig,
    PrecondKind,
    SolverError,
    alpha_optimal,
    certificates,
    condition_numbers,
    energy,
    initial_condition,
    inverse_laplacian,
    mass_matrix,
    run,
    run_command,
    sigma_tilde,
    spectrum,
    stiffness_matrix,
    weighted_mass_matrix,
)

__all__ = [
    "AlphaStrategy",
    "ConfigError",
    "Error",
    "Mesh",
    "Params",
    "PrecondConfig",
    "PrecondKind",
    "SolverError",
    "alpha_optimal",
    "certificates",
    "condition_numbers",
    "energy",
    "initial_condition",
    "inverse_laplacian",
    "mass_matrix",
    "run",
    "run_command",
    "sigma_tilde",
    "spectrum",
    "stiffness_matrix",
    "weighted_mass_matrix",
]
