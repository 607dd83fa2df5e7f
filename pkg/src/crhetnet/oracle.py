"""Exhaustive reference solver for tiny instances.

Enumerates every conflict-free assignment and, per assignment, every
combination of per-user powers on a nested uniform grid, keeping the best
min-rate. Interference coupling is exact because all powers are explicit.
The search is coded independently of the dual solver so it can vouch for it.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .dual_solver import SolverReport, _residuals
from .errors import InstanceTooLargeError
from .model import MACRO, Assignment, ChannelRealization, NetworkConfig, Topology
from .rate import evaluate

MAX_USERS = 3
MAX_CHANNELS = 3
MAX_BS = 3
MAX_GRID = 64

# Loose comparisons so exact-budget grid sums survive float rounding.
_FEAS_SLACK = 1e-9


@dataclass(frozen=True)
class _GridBest:
    min_rate: float
    powers: np.ndarray


def _power_grid(budget: float, grid_points: int) -> np.ndarray:
    """grid_points+1 levels 0, budget/grid_points, ..., budget.

    Doubling grid_points yields a superset of the levels, so a finer search
    can never do worse (refinement monotonicity).
    """
    return np.arange(grid_points + 1) * (budget / grid_points)


def grid_maxmin_for_assignment(
    assignment: Assignment,
    config: NetworkConfig,
    topology: Topology,
    channels: ChannelRealization,
    grid_points: int = 32,
) -> _GridBest:
    """Best min-rate over the power grid for one fixed assignment.

    Returns min_rate = -inf when no grid combination is feasible (cannot
    happen in practice since all-zero powers are always feasible).
    """
    num_users = assignment.num_users
    budgets = config.bs_budgets
    users = range(num_users)
    ch, bs = assignment.channel, assignment.bs

    def axis(u, arr):
        shape = [1] * num_users
        shape[u] = arr.size
        return arr.reshape(shape)

    powers = [axis(u, _power_grid(float(budgets[bs[u]]), grid_points)) for u in users]

    feasible = True
    for b in range(config.num_bs):
        members = [u for u in users if bs[u] == b]
        if len(members) > 1:
            load = sum(powers[u] for u in members)
            feasible = feasible & (load <= budgets[b] + _FEAS_SLACK)

    h_used = [float(channels.h[u, ch[u], bs[u]]) for u in users]
    interference = sum(powers[u] * h_used[u] for u in users)
    feasible = feasible & (interference <= config.interference_threshold + _FEAS_SLACK)

    # Exact cross-tier coupling: the interferer of user u is whoever occupies
    # the same channel on the other tier under this assignment.
    owner = topology.owner_of_channel()
    occupant = {(int(c), int(b)): u for u, (c, b) in enumerate(zip(ch, bs))}
    min_rate = None
    for u in users:
        c_u, b_u = int(ch[u]), int(bs[u])
        interferer_bs = int(owner[c_u]) if b_u == MACRO else MACRO
        w = occupant.get((c_u, interferer_bs)) if interferer_bs >= 0 else None
        p_int = powers[w] if w is not None else 0.0
        g = float(channels.g[u, c_u, b_u])
        f = float(channels.f[u, c_u, b_u])
        rate = np.log2(1.0 + powers[u] * g / (p_int * f + config.noise_psd))
        min_rate = rate if min_rate is None else np.minimum(min_rate, rate)

    min_rate = np.where(feasible, min_rate, -np.inf)
    flat = int(np.argmax(min_rate))
    idx = np.unravel_index(flat, min_rate.shape)
    best_powers = np.array(
        [_power_grid(float(budgets[bs[u]]), grid_points)[idx[u]] for u in users]
    )
    return _GridBest(min_rate=float(min_rate[idx]), powers=best_powers)


def brute_force_maxmin(
    config: NetworkConfig,
    topology: Topology,
    channels: ChannelRealization,
    grid_points: int = 32,
) -> SolverReport:
    """Global max-min reference over all assignments and gridded powers.

    Ties between assignments keep the lexicographically smallest one (slots
    compared in (bs, channel) order, user by user). Refuses instances beyond
    the complexity guard.
    """
    if config.num_users > MAX_USERS or config.num_channels > MAX_CHANNELS or config.num_bs > MAX_BS:
        raise InstanceTooLargeError(
            f"brute force limited to {MAX_USERS} users / {MAX_CHANNELS} channels / {MAX_BS} BSs"
        )
    if not 1 <= grid_points <= MAX_GRID:
        raise InstanceTooLargeError(f"grid_points must be in [1, {MAX_GRID}], got {grid_points}")

    slots = topology.legal_slots()
    if config.num_users > len(slots):
        raise InstanceTooLargeError("more users than legal slots; no assignment exists")

    best_value = -np.inf
    best_assignment = None
    best_powers = None
    for combo in permutations(slots, config.num_users):
        assignment = Assignment(
            channel=np.array([c for _, c in combo], dtype=np.int64),
            bs=np.array([b for b, _ in combo], dtype=np.int64),
        )
        found = grid_maxmin_for_assignment(assignment, config, topology, channels, grid_points)
        if found.min_rate > best_value:
            best_value = found.min_rate
            best_assignment = assignment
            best_powers = found.powers

    rv = evaluate(best_assignment, best_powers, channels, config, topology)
    dual_width = config.num_users + config.num_bs + 1
    return SolverReport(
        assignment=best_assignment,
        powers=best_powers,
        rates=rv,
        iterations=0,
        converged=True,
        dual_trajectory=np.zeros((0, dual_width)),
        residuals=_residuals(best_powers, best_assignment, channels, config),
        best_iteration=0,
        trace_min_rate=np.zeros(0),
        trace_budget_overrun=np.zeros(0),
        trace_interference_overrun=np.zeros(0),
    )
