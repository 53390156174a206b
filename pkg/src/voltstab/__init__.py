"""Stability indicators and solvers for linear Volterra integral and integro-differential systems."""
from .integrator import GridSpec, Trajectory, integrate, integrate_many, memory_integral, solve_ie
from .linalg import (NormKind, NumericalFailure, log_norm, log_norm_limit_estimate,
                     matrix_operator_norm, symmetric_eigen_max, vector_norm)
from .model import (IDEProblem, IEProblem, KernelFunction, MatrixTimeFunction, TimeFunction,
                    builtin_fig1_problem, builtin_fig2_problem, ie_to_cauchy, kernel_dt)
from .scenario import Scenario, ScenarioError, parse_scenario, run_scenario, sweep_unit_circle
from .stability import (StabilityConfig, StabilityReport, averaged_check, theorem1_trace,
                        theorem1_verdict, theorem2_verdict, theorem3_trace, theorem3_verdict,
                        verify_against_trajectory)

__all__ = [
    "GridSpec",
    "Trajectory",
    "integrate",
    "integrate_many",
    "memory_integral",
    "solve_ie",
    "NormKind",
    "NumericalFailure",
    "log_norm",
    "log_norm_limit_estimate",
    "matrix_operator_norm",
    "symmetric_eigen_max",
    "vector_norm",
    "IDEProblem",
    "IEProblem",
    "KernelFunction",
    "MatrixTimeFunction",
    "TimeFunction",
    "builtin_fig1_problem",
    "builtin_fig2_problem",
    "ie_to_cauchy",
    "kernel_dt",
    "Scenario",
    "ScenarioError",
    "parse_scenario",
    "run_scenario",
    "sweep_unit_circle",
    "StabilityConfig",
    "StabilityReport",
    "averaged_check",
    "theorem1_trace",
    "theorem1_verdict",
    "theorem2_verdict",
    "theorem3_trace",
    "theorem3_verdict",
    "verify_against_trajectory",
]

__version__ = "0.1.0"
