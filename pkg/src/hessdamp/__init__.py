"""Inertial gradient methods with viscous and Hessian-driven damping."""

from .core import (
    ConditionError,
    ConditionWarning,
    GammaSchedule,
    Objective,
    SolverParams,
    TraceRecord,
    check_params,
    coefficients_at,
    estimate_lipschitz,
    validate_convergence_condition,
    validate_saddle_condition,
)
from .solvers import (
    DivergenceError,
    GeneralCoefficients,
    Scheme,
    SolverState,
    Trace,
    gd_step,
    hbf_step,
    isehd_general_step,
    isehd_step,
    isihd_general_step,
    isihd_step,
    run,
)

__version__ = "0.1.0"
