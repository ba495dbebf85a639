"""Hermite-method solver for 3D periodic advection.

Cell-local degree-(2N+1) Hermite reconstruction plus Taylor-series time
stepping on staggered grids, with interchangeable two-pass and fused
execution pipelines and a roofline-style performance accounting layer.
"""

__version__ = "0.1.0"

from .field import CellCoeffs, DofField, GridSpec, gather_cell, scatter_dofs
from .kernels import (
    TaylorParams,
    advect_time_derivative,
    default_stages,
    reconstruct_cell,
    taylor_evolve_horner,
    taylor_evolve_recursion,
    verify_space_time_identity,
)
from .operators import (
    DerivOperator,
    InterpOperator,
    apply_along_axis,
    build_deriv_operator,
    build_interp_operator,
)
from .pipeline import (
    AllocationStats,
    InstabilityError,
    OperatorSet,
    StepConfig,
    full_step,
    half_step,
    select_dt,
    tile_schedule,
)
from .problems import (
    Constant,
    ErrorNorms,
    FourierMode,
    Monomial,
    SeparableIC,
    compute_error,
    exact_solution,
    init_field,
    plane_wave,
)

__all__ = [
    "__version__",
    "GridSpec", "DofField", "CellCoeffs", "gather_cell", "scatter_dofs",
    "InterpOperator", "DerivOperator", "build_interp_operator", "build_deriv_operator",
    "apply_along_axis",
    "TaylorParams", "reconstruct_cell", "advect_time_derivative",
    "taylor_evolve_horner", "taylor_evolve_recursion", "verify_space_time_identity",
    "default_stages",
    "StepConfig", "OperatorSet", "AllocationStats", "InstabilityError",
    "half_step", "full_step", "select_dt", "tile_schedule",
    "SeparableIC", "FourierMode", "Constant", "Monomial", "ErrorNorms",
    "init_field", "exact_solution", "compute_error", "plane_wave",
]
