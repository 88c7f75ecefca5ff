"""Guided time-optimal MPC for multirotor translation.

Per-axis bang-bang minimum-time solutions, thrust-budget decomposition,
guidance sampling, a condensed linear MPC with an ADMM QP solver, and a
point-mass simulator for the line-to-circle flight.
"""
from .axis import AxisBoundary, AxisSolution, min_time, oracle_min_time, solve_axis, switch_function, transfer_time_T
from .core import AccelBudget, State3, Tolerances, VehicleParams, accel_budget
from .decomposition import (
    DecompositionConfig,
    DecompositionResult,
    benchmark_random_pairs,
    decompose_thrust,
    is_time_equal,
    rho_t_delta,
    rho_t_min,
)
from .guidance import GuidanceTrajectory, build_guidance
from .mpc import DTOTP, GTOMPC, MpcController, MpcParams, MpcSolution, build_mpc_qp
from .qp import QpProblem, QpSettings, QpSolution, solve_qp
from .sim import (
    NO_RESET_START,
    NO_RESET_TARGET,
    ScenarioResult,
    SimConfig,
    integrate,
    run_no_reset_scenario,
    run_point_to_point,
)

__all__ = [
    "AccelBudget", "AxisBoundary", "AxisSolution", "DTOTP", "DecompositionConfig",
    "DecompositionResult", "GTOMPC", "GuidanceTrajectory", "MpcController", "MpcParams",
    "MpcSolution", "NO_RESET_START", "NO_RESET_TARGET", "QpProblem", "QpSettings",
    "QpSolution", "ScenarioResult", "SimConfig", "State3", "Tolerances", "VehicleParams",
    "accel_budget", "benchmark_random_pairs", "build_guidance", "build_mpc_qp",
    "decompose_thrust", "integrate", "is_time_equal", "min_time", "oracle_min_time",
    "rho_t_delta", "rho_t_min", "run_no_reset_scenario", "run_point_to_point",
    "solve_axis", "solve_qp", "switch_function", "transfer_time_T",
]
