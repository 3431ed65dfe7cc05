"""Solver and diagnostics for evolution equations with exponentially decaying
memory, discretised by implicit Euler plus product quadrature."""

from .kernel import KernelSpec, QuadWeights, TimeGrid, kernel_eval, weights_closed_form, weights_numeric
from .memory import (
    GridFunction,
    MemoryState,
    k_apply_direct,
    k_apply_direct_all,
    k_continuous,
    k_positivity_check,
    k_update_recurrence,
)
from .operators import (
    MonotoneOperatorDescriptor,
    ProblemInstance,
    SpdOperatorDescriptor,
    b_inner,
    make_diag_linear,
    make_laplacian_spd_1d,
    make_p_laplacian_1d,
    make_scalar_cubic,
    make_scaled_identity_spd,
)
from .stepper import StepperConfig, Trajectory, run

__all__ = [
    "KernelSpec", "QuadWeights", "TimeGrid", "kernel_eval",
    "weights_closed_form", "weights_numeric",
    "GridFunction", "MemoryState", "k_apply_direct", "k_apply_direct_all",
    "k_continuous", "k_positivity_check", "k_update_recurrence",
    "MonotoneOperatorDescriptor", "ProblemInstance", "SpdOperatorDescriptor",
    "b_inner", "make_diag_linear", "make_laplacian_spd_1d",
    "make_p_laplacian_1d", "make_scalar_cubic", "make_scaled_identity_spd",
    "StepperConfig", "Trajectory", "run",
]

__version__ = "0.1.0"
