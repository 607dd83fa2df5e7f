"""Baseline schemes: fixed assignment with optimized or fixed power loading."""

from __future__ import annotations

import numpy as np

from .dual_solver import SolverOptions, SolverReport, project_feasible, run_dual_loop, _residuals
from .errors import InfeasibleAssignmentError
from .model import Assignment, ChannelRealization, NetworkConfig, Topology
from .rate import evaluate


def fixed_assignment(config: NetworkConfig, topology: Topology) -> Assignment:
    """Deterministic round-robin: user a takes the a-th legal slot in
    (bs, channel) lexicographic order."""
    slots = topology.legal_slots()
    if config.num_users > len(slots):
        raise InfeasibleAssignmentError(
            f"{config.num_users} users but only {len(slots)} legal (channel, bs) slots"
        )
    chosen = slots[: config.num_users]
    return Assignment(
        channel=np.array([c for _, c in chosen], dtype=np.int64),
        bs=np.array([b for b, _ in chosen], dtype=np.int64),
    )


def solve_faop(
    config: NetworkConfig,
    topology: Topology,
    channels: ChannelRealization,
    options: SolverOptions | None = None,
) -> SolverReport:
    """Optimized power loading over the frozen round-robin assignment."""
    frozen = fixed_assignment(config, topology)
    return run_dual_loop(config, topology, channels, options or SolverOptions(), frozen)


def solve_fafp(
    config: NetworkConfig,
    topology: Topology,
    channels: ChannelRealization,
) -> SolverReport:
    """Round-robin assignment with each BS's budget split equally among its
    users, then scaled down if the interference cap is exceeded. No iterations."""
    assignment = fixed_assignment(config, topology)
    counts = np.bincount(assignment.bs, minlength=config.num_bs)
    shares = np.zeros(config.num_bs)
    served = counts > 0
    shares[served] = config.bs_budgets[served] / counts[served]
    powers = project_feasible(shares[assignment.bs], assignment, channels, config)
    rv = evaluate(assignment, powers, channels, config, topology)
    dual_width = config.num_users + config.num_bs + 1
    return SolverReport(
        assignment=assignment,
        powers=powers,
        rates=rv,
        iterations=0,
        converged=True,
        dual_trajectory=np.zeros((0, dual_width)),
        residuals=_residuals(powers, assignment, channels, config),
        best_iteration=0,
        trace_min_rate=np.zeros(0),
        trace_budget_overrun=np.zeros(0),
        trace_interference_overrun=np.zeros(0),
    )
