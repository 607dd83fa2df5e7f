"""Max-min fair power allocation and user assignment for underlay CR HetNets.

A numpy library plus CLI that jointly optimizes user-to-(channel, BS)
assignment and transmit power in a two-tier cognitive-radio network under
per-BS budgets and an interference-temperature cap, via dual decomposition
with closed-form power loading and subgradient multiplier updates. Ships
two fixed-assignment baselines, an exhaustive tiny-instance reference
solver, and a seeded Monte-Carlo sweep harness.
"""

from .baselines import fixed_assignment, solve_faop, solve_fafp
from .dual_solver import (
    DualState,
    SolverOptions,
    SolverReport,
    assign_users,
    power_subproblem_objective,
    project_feasible,
    solve_aux,
    solve_oaop,
    solve_power,
    update_duals,
    write_trace_csv,
)
from .errors import (
    AssignmentError,
    CrhetnetError,
    InfeasibleAssignmentError,
    InstanceTooLargeError,
    InvalidConfigError,
    UndefinedMetricError,
)
from .harness import (
    SweepResult,
    SweepSpec,
    cell_seed,
    convergence_trace,
    emit_csv,
    emit_plot,
    run_sweep,
)
from .model import (
    MACRO,
    Assignment,
    ChannelRealization,
    NetworkConfig,
    Topology,
    build_topology,
    draw_channels,
    validate_assignment,
)
from .oracle import brute_force_maxmin, grid_maxmin_for_assignment
from .rate import (
    InterferenceState,
    RateVector,
    evaluate,
    interference_state,
    peak_to_average_ratio,
    percentage_gap,
    sinr,
    sum_throughput,
    user_rate,
)

__version__ = "0.1.0"

__all__ = [
    "MACRO",
    "Assignment",
    "AssignmentError",
    "ChannelRealization",
    "CrhetnetError",
    "DualState",
    "InfeasibleAssignmentError",
    "InstanceTooLargeError",
    "InterferenceState",
    "InvalidConfigError",
    "NetworkConfig",
    "RateVector",
    "SolverOptions",
    "SolverReport",
    "SweepResult",
    "SweepSpec",
    "Topology",
    "UndefinedMetricError",
    "assign_users",
    "brute_force_maxmin",
    "build_topology",
    "cell_seed",
    "convergence_trace",
    "draw_channels",
    "emit_csv",
    "emit_plot",
    "evaluate",
    "fixed_assignment",
    "grid_maxmin_for_assignment",
    "interference_state",
    "peak_to_average_ratio",
    "percentage_gap",
    "power_subproblem_objective",
    "project_feasible",
    "run_sweep",
    "sinr",
    "solve_aux",
    "solve_faop",
    "solve_fafp",
    "solve_oaop",
    "solve_power",
    "sum_throughput",
    "update_duals",
    "user_rate",
    "validate_assignment",
    "write_trace_csv",
]
