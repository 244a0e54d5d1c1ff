"""Simulation and verification of jump-driven nonlinear diffusion.

Trajectories solve ``dX = -A X dt + eta dN`` between the atoms of a marked
point process, where ``A`` is a weighted p-Laplacian with zero-flux
boundary and the flow between atoms is the implicit-Euler exponential
formula.  The :mod:`jumpflow.verification` suites check the contraction,
norm-bound, regularity and weak-form properties of the computed paths.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, JumpflowError, NumericError, SolverError
from .grid import GridDomain, StateField, distance1
from .jumps import (
    DriftFunction,
    JumpSequence,
    Trajectory,
    build_jump_sequence,
    evaluate_trajectory,
    mild_approximation_run,
    strong_solution_residual,
    weak_form_profile,
)
from .plaplacian import PLaplacian, PLaplaceParams, WeightField, apply_operator, resolvent_solve
from .point_process import (
    InterArrival,
    MarkSpace,
    MarkedPointRealization,
    RenewalSpec,
    atoms_in_window,
    counting_integral,
    sample_renewal,
)
from .quantizer import DenseQuantizer, quantize
from .semigroup import EvolveConfig, evolve, evolve_path, generator_apply, semigroup_defect

__all__ = [
    "ConfigError", "DomainError", "JumpflowError", "NumericError", "SolverError",
    "GridDomain", "StateField", "distance1",
    "DriftFunction", "JumpSequence", "Trajectory", "build_jump_sequence", "evaluate_trajectory",
    "mild_approximation_run", "strong_solution_residual", "weak_form_profile",
    "PLaplacian", "PLaplaceParams", "WeightField", "apply_operator", "resolvent_solve",
    "InterArrival", "MarkSpace", "MarkedPointRealization", "RenewalSpec", "atoms_in_window",
    "counting_integral", "sample_renewal",
    "DenseQuantizer", "quantize",
    "EvolveConfig", "evolve", "evolve_path", "generator_apply", "semigroup_defect",
]
