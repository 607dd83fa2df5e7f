"""Dual-decomposition solver for max-min rate fairness.

The coupled assignment + power problem is relaxed with one multiplier per
user-rate constraint, one per BS power budget, and one for the aggregate
interference cap at the primary receiver. Each iteration solves two
closed-form subproblems (a scalar auxiliary variable and a per-slot
water-filling power), seats users greedily by their subproblem objective,
restores primal feasibility by uniform scaling, and steps the multipliers
along their constraint violations. The reported solution is the feasible
iterate with the best min-rate seen, since subgradient iterates are not
monotone.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleAssignmentError
from .model import Assignment, ChannelRealization, NetworkConfig, Topology, validate_assignment
from .rate import InterferenceState, RateVector

# Water level used when a slot's multiplier combination vanishes; feasibility
# is restored afterwards by projection, so only its magnitude matters.
POWER_CAP_FACTOR = 1e6

# Inner sweeps that settle each iterate's powers with the interference they
# generate; the coupling is weak, so a handful of passes reaches machine
# precision on all but pathological draws.
FIXED_POINT_SWEEPS = 8


def _interferer_index(assignment: Assignment, owner: np.ndarray, num_bs: int) -> np.ndarray:
    """Index of the user interfering with each user under this assignment, -1 if none."""
    num_channels, num_users = owner.size, assignment.num_users
    occupant = np.full((num_channels, num_bs), -1, dtype=np.int64)
    occupant[assignment.channel, assignment.bs] = np.arange(num_users)
    interferer_bs = np.where(assignment.bs == 0, owner[assignment.channel], 0)
    idx = occupant[assignment.channel, np.maximum(interferer_bs, 0)]
    return np.where(interferer_bs >= 0, idx, -1)


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the subgradient loop.

    ``step_schedule`` is "constant" (delta every iteration) or "sqrt"
    (delta / sqrt(iteration), finer as the run progresses). A tolerance of 0
    disables early stopping. Multiplier start values follow the reference
    convergence experiment.
    """

    max_iters: int = 500
    step_delta: float = 0.01
    tolerance: float = 1e-4
    step_schedule: str = "constant"
    init_user_mult: float = 0.6
    init_bs_mult: float = 0.6
    init_interference_mult: float = 0.1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step_delta <= 0:
            raise ValueError("step_delta must be > 0")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        if self.step_schedule not in ("constant", "sqrt"):
            raise ValueError(f"unknown step_schedule {self.step_schedule!r}")

    def step_at(self, iteration: int) -> float:
        if self.step_schedule == "sqrt":
            return self.step_delta / math.sqrt(iteration)
        return self.step_delta


@dataclass(frozen=True, eq=False)
class DualState:
    """Multipliers of one iteration: per-user, per-BS, interference, plus the
    auxiliary scalar of the fairness reformulation."""

    user_mult: np.ndarray
    bs_mult: np.ndarray
    interference_mult: float
    step_delta: float
    aux: float = 0.0

    def __post_init__(self):
        self.user_mult.setflags(write=False)
        self.bs_mult.setflags(write=False)


@dataclass(frozen=True, eq=False)
class SolverReport:
    """Outcome of one solve: best feasible iterate plus convergence telemetry.

    ``dual_trajectory`` stacks (user multipliers, BS multipliers,
    interference multiplier) per iteration, row 0 being the initial state.
    ``trace_*`` arrays hold one entry per iteration; the overruns are the
    raw (pre-projection) constraint violations, showing how hard projection
    had to work.
    """

    assignment: Assignment
    powers: np.ndarray
    rates: RateVector
    iterations: int
    converged: bool
    dual_trajectory: np.ndarray
    residuals: dict
    best_iteration: int
    trace_min_rate: np.ndarray
    trace_budget_overrun: np.ndarray
    trace_interference_overrun: np.ndarray


def solve_aux(user_mult: np.ndarray) -> float:
    """Closed-form minimizer of the scalar auxiliary subproblem: half the
    clamped sum of the per-user multipliers."""
    return max(float(np.sum(user_mult)), 0.0) / 2.0


def _project_simplex(y: np.ndarray, mass: float) -> np.ndarray:
    """Euclidean projection of y onto {x >= 0, sum(x) = mass}.

    The common shift of the projection can lift zeroed coordinates back up,
    so no user's multiplier is ever permanently absorbed at zero.
    """
    z = np.sort(y)[::-1]
    cumulative = np.cumsum(z) - mass
    rho = np.nonzero(z > cumulative / np.arange(1, y.size + 1))[0][-1]
    tau = cumulative[rho] / (rho + 1.0)
    return np.maximum(y - tau, 0.0)


def _water_levels(user_mult, bs_mult, interference_mult, h, power_cap):
    """Per-slot water level user_mult / (bs_mult + v*h), capped at power_cap.

    A vanishing denominator with a positive numerator means the budget and
    interference prices are both zero; the level is then the cap and
    projection restores feasibility later. Zero numerator means no water.
    """
    lam = user_mult[:, None, None]
    denom = bs_mult[None, None, :] + interference_mult * h
    safe = np.where(denom > 0, denom, 1.0)
    levels = np.where(denom > 0, lam / safe, power_cap)
    levels = np.where(lam > 0, levels, 0.0)
    return np.minimum(levels, power_cap)


def candidate_power_matrix(
    user_mult: np.ndarray,
    bs_mult: np.ndarray,
    interference_mult: float,
    channels: ChannelRealization,
    effective_noise: np.ndarray,
    power_cap: float,
) -> np.ndarray:
    """Closed-form power for every (user, channel, bs) triple at once.

    Water-filling form: (level - effective_noise / g)+, with zero power on
    zero-gain slots.
    """
    levels = _water_levels(user_mult, bs_mult, interference_mult, channels.h, power_cap)
    g_safe = np.where(channels.g > 0, channels.g, 1.0)
    powers = np.maximum(levels - effective_noise / g_safe, 0.0)
    return np.where(channels.g > 0, powers, 0.0)


def solve_power(
    a: int,
    c: int,
    b: int,
    dual: DualState,
    channels: ChannelRealization,
    interference: InterferenceState,
    power_cap: float = math.inf,
) -> float:
    """Closed-form KKT power for one (user, channel, bs) triple.

    P* = (user_mult / (bs_mult + v*h) - effective_noise / g)+, the exact
    stationary point of the per-slot power subproblem.
    """
    lam = float(dual.user_mult[a])
    g = float(channels.g[a, c, b])
    h = float(channels.h[a, c, b])
    xi = float(interference.effective_noise[a, c, b])
    if g <= 0.0 or lam <= 0.0:
        return 0.0
    denom = float(dual.bs_mult[b]) + dual.interference_mult * h
    level = lam / denom if denom > 0 else power_cap
    level = min(level, power_cap)
    return max(level - xi / g, 0.0)


def power_subproblem_objective(p, user_mult, bs_mult, interference_mult, g, h, effective_noise):
    """Per-slot dual subproblem objective, in the natural-log rate form whose
    exact minimizer is the closed-form power.

    -user_mult * ln(1 + p*g/effective_noise) + (bs_mult + v*h) * p
    """
    return -user_mult * np.log(1.0 + p * g / effective_noise) + (bs_mult + interference_mult * h) * p


def assignment_metric(
    dual: DualState,
    channels: ChannelRealization,
    effective_noise: np.ndarray,
    candidate_powers: np.ndarray,
) -> np.ndarray:
    """Per-slot seating cost: -user_mult*log2(1+SINR(P*)) + bs_mult*P* + v*P**h."""
    s = candidate_powers * channels.g / effective_noise
    return (
        -dual.user_mult[:, None, None] * np.log2(1.0 + s)
        + dual.bs_mult[None, None, :] * candidate_powers
        + dual.interference_mult * candidate_powers * channels.h
    )


def greedy_assign(metric: np.ndarray, legal: np.ndarray) -> Assignment:
    """Seat every user in its cheapest remaining legal slot.

    Users are processed in ascending order of their best achievable metric
    (ties by user index); each takes its best slot among those not yet
    taken (ties by lowest channel, then BS index).
    """
    num_users, num_channels, num_bs = metric.shape
    if int(legal.sum()) < num_users:
        raise InfeasibleAssignmentError(
            f"{num_users} users but only {int(legal.sum())} legal (channel, bs) slots"
        )
    cost = np.where(legal[None, :, :], metric, np.inf)
    order = np.argsort(cost.reshape(num_users, -1).min(axis=1), kind="stable")
    taken = np.zeros((num_channels, num_bs), dtype=bool)
    channel = np.empty(num_users, dtype=np.int64)
    bs = np.empty(num_users, dtype=np.int64)
    for a in order:
        slot_cost = cost[a].copy()
        slot_cost[taken] = np.inf
        flat = int(np.argmin(slot_cost))
        c, b = divmod(flat, num_bs)
        taken[c, b] = True
        channel[a] = c
        bs[a] = b
    return Assignment(channel=channel, bs=bs)


def assign_users(
    dual: DualState,
    channels: ChannelRealization,
    topology: Topology,
    interference: InterferenceState,
    power_cap: float = math.inf,
) -> Assignment:
    """Assign each user the (channel, bs) slot minimizing its seating cost,
    with greedy conflict resolution."""
    candidates = candidate_power_matrix(
        dual.user_mult,
        dual.bs_mult,
        dual.interference_mult,
        channels,
        interference.effective_noise,
        power_cap,
    )
    metric = assignment_metric(dual, channels, interference.effective_noise, candidates)
    return greedy_assign(metric, topology.legal_mask())


def project_feasible(
    powers: np.ndarray,
    assignment: Assignment,
    channels: ChannelRealization,
    config: NetworkConfig,
) -> np.ndarray:
    """Uniformly scale powers down until budgets and the interference cap hold.

    Each over-budget BS's users are scaled by the largest factor meeting the
    budget; a residual interference violation is then removed by one global
    scale, which cannot re-break the budgets.
    """
    powers = np.asarray(powers, dtype=float).copy()
    budgets = config.bs_budgets
    loads = np.bincount(assignment.bs, weights=powers, minlength=config.num_bs)
    scale = np.ones(config.num_bs)
    over = loads > budgets
    scale[over] = budgets[over] / loads[over]
    powers *= scale[assignment.bs]

    users = np.arange(assignment.num_users)
    h_used = channels.h[users, assignment.channel, assignment.bs]
    interference = float(powers @ h_used)
    if interference > config.interference_threshold:
        powers *= config.interference_threshold / interference
    return powers


def update_duals(
    state: DualState,
    assignment: Assignment,
    powers: np.ndarray,
    rates: RateVector,
    channels: ChannelRealization,
    config: NetworkConfig,
    step: float | None = None,
) -> DualState:
    """One projected subgradient step on all multipliers.

    Each multiplier moves along its constraint violation (positive when
    violated, negative when slack) and is clamped at zero. Budget
    subgradient: used power minus budget; interference: weighted load minus
    the cap. The per-user multipliers step along -(rate_a + aux) and are
    then projected back onto their fixed-mass simplex: a max-min objective
    prices only the *relative* urgency of the users, and without mass
    conservation the uniformly negative subgradient sends every user
    multiplier to zero and the solver's power collapses with it.
    """
    delta = state.step_delta if step is None else step
    mass = float(np.sum(state.user_mult))
    user_mult = state.user_mult + delta * (-rates.rates - state.aux)
    if mass > 0.0:
        user_mult = _project_simplex(user_mult, mass)
    else:
        user_mult = np.maximum(user_mult, 0.0)
    loads = np.bincount(assignment.bs, weights=powers, minlength=config.num_bs)
    bs_mult = np.maximum(state.bs_mult + delta * (loads - config.bs_budgets), 0.0)
    users = np.arange(assignment.num_users)
    h_used = channels.h[users, assignment.channel, assignment.bs]
    interference_load = float(powers @ h_used)
    interference_mult = max(
        state.interference_mult + delta * (interference_load - config.interference_threshold), 0.0
    )
    return DualState(
        user_mult=user_mult,
        bs_mult=bs_mult,
        interference_mult=interference_mult,
        step_delta=state.step_delta,
        aux=state.aux,
    )


def _residuals(powers, assignment, channels, config):
    loads = np.bincount(assignment.bs, weights=powers, minlength=config.num_bs)
    users = np.arange(assignment.num_users)
    h_used = channels.h[users, assignment.channel, assignment.bs]
    return {
        "budget": np.maximum(loads - config.bs_budgets, 0.0),
        "interference": max(float(powers @ h_used) - config.interference_threshold, 0.0),
    }


def _exact_rates(assignment, powers, channels, config, owner) -> RateVector:
    """Rates of an allocation with exact cross-tier coupling, per-user only.

    Same arithmetic as rate.evaluate but without validation or full
    candidate-grid tensors; the solver calls this every iteration.
    """
    num_channels, num_bs = channels.shape[1], channels.shape[2]
    users = np.arange(assignment.num_users)
    ch, bs = assignment.channel, assignment.bs
    tx = np.zeros((num_channels, num_bs))
    tx[ch, bs] = powers
    interferer_bs = np.where(bs == 0, owner[ch], 0)
    p_int = np.where(interferer_bs >= 0, tx[ch, np.maximum(interferer_bs, 0)], 0.0)
    xi = p_int * channels.f[users, ch, bs] + config.noise_psd
    return RateVector.from_rates(np.log2(1.0 + powers * channels.g[users, ch, bs] / xi))


def run_dual_loop(
    config: NetworkConfig,
    topology: Topology,
    channels: ChannelRealization,
    options: SolverOptions,
    fixed_assignment: Assignment | None,
) -> SolverReport:
    """Shared subgradient loop; a frozen assignment turns it into pure power loading.

    The cross-tier interferer powers each iteration come from the previous
    iterate's allocation (started at zero). Multipliers step along the raw
    subproblem solution's constraint values, so an over-budget BS raises its
    price; each iterate's projected feasible version is what gets evaluated
    and tracked for the returned best-min-rate solution.
    """
    num_users, num_bs = config.num_users, config.num_bs
    num_channels = config.num_channels
    budgets = config.bs_budgets
    power_cap = POWER_CAP_FACTOR * float(budgets.max())
    legal = topology.legal_mask()
    owner = topology.owner_of_channel()
    owned = owner >= 0
    users = np.arange(num_users)

    lam = np.full(num_users, options.init_user_mult, dtype=float)
    eta = np.full(num_bs, options.init_bs_mult, dtype=float)
    v = options.init_interference_mult

    prev_assignment: Assignment | None = fixed_assignment
    prev_powers = np.zeros(num_users)

    trajectory = [np.concatenate([lam, eta, [v]])]
    trace_min_rate: list[float] = []
    trace_budget_overrun: list[float] = []
    trace_interference_overrun: list[float] = []

    best = None
    converged = False
    iterations = 0

    for iteration in range(1, options.max_iters + 1):
        iterations = iteration
        step = options.step_at(iteration)
        aux = solve_aux(lam)
        state = DualState(
            user_mult=lam, bs_mult=eta, interference_mult=v, step_delta=options.step_delta, aux=aux
        )

        if prev_assignment is None:
            effective_noise = np.full(channels.shape, config.noise_psd)
        else:
            tx = np.zeros((num_channels, num_bs))
            tx[prev_assignment.channel, prev_assignment.bs] = prev_powers
            pprime = np.zeros((num_channels, num_bs))
            pprime[owned, 0] = tx[owned, owner[owned]]
            pprime[:, 1:] = tx[:, 0][:, None]
            effective_noise = pprime[None, :, :] * channels.f + config.noise_psd

        candidates = candidate_power_matrix(lam, eta, v, channels, effective_noise, power_cap)
        if fixed_assignment is not None:
            assignment = fixed_assignment
        else:
            metric = assignment_metric(state, channels, effective_noise, candidates)
            assignment = greedy_assign(metric, legal)

        # Sweep the power/interference pair on the chosen assignment to a
        # fixed point, so the iterate's powers are consistent with the
        # interference they create.
        raw = candidates[users, assignment.channel, assignment.bs]
        g_used = channels.g[users, assignment.channel, assignment.bs]
        f_used = channels.f[users, assignment.channel, assignment.bs]
        h_used = channels.h[users, assignment.channel, assignment.bs]
        denom_used = eta[assignment.bs] + v * h_used
        levels = np.where(
            lam > 0,
            np.where(denom_used > 0, lam / np.where(denom_used > 0, denom_used, 1.0), power_cap),
            0.0,
        )
        levels = np.minimum(levels, power_cap)
        interferer = _interferer_index(assignment, owner, num_bs)
        powers = project_feasible(raw, assignment, channels, config)
        xi_raw = effective_noise[users, assignment.channel, assignment.bs]
        for _ in range(FIXED_POINT_SWEEPS):
            p_int = np.where(interferer >= 0, powers[np.maximum(interferer, 0)], 0.0)
            xi_raw = p_int * f_used + config.noise_psd
            raw = np.where(g_used > 0, np.maximum(levels - xi_raw / np.where(g_used > 0, g_used, 1.0), 0.0), 0.0)
            new_powers = project_feasible(raw, assignment, channels, config)
            shift = float(np.max(np.abs(new_powers - powers)))
            powers = new_powers
            if shift < 1e-12:
                break
        raw_residuals = _residuals(raw, assignment, channels, config)
        rv = _exact_rates(assignment, powers, channels, config, owner)

        trace_min_rate.append(rv.min_rate)
        trace_budget_overrun.append(float(raw_residuals["budget"].max()))
        trace_interference_overrun.append(raw_residuals["interference"])

        if best is None or rv.min_rate > best[3].min_rate:
            best = (iteration, assignment, powers, rv)

        # Dual subgradients use the raw subproblem minimizer at the noise
        # level the subproblem assumed: an over-subscribed BS raises its
        # price, which both restores its budget and steers later seatings
        # away from crowded cells.
        raw_rates = RateVector.from_rates(np.log2(1.0 + raw * g_used / xi_raw))
        new_state = update_duals(state, assignment, raw, raw_rates, channels, config, step=step)
        change = max(
            float(np.max(np.abs(new_state.user_mult - lam))),
            float(np.max(np.abs(new_state.bs_mult - eta))),
            abs(new_state.interference_mult - v),
        )
        lam, eta, v = new_state.user_mult, new_state.bs_mult, new_state.interference_mult
        trajectory.append(np.concatenate([lam, eta, [v]]))
        prev_assignment, prev_powers = assignment, powers

        if options.tolerance > 0 and change < options.tolerance:
            converged = True
            break

    best_iteration, assignment, powers, rv = best
    validate_assignment(assignment, config, topology)
    return SolverReport(
        assignment=assignment,
        powers=powers,
        rates=rv,
        iterations=iterations,
        converged=converged,
        dual_trajectory=np.vstack(trajectory),
        residuals=_residuals(powers, assignment, channels, config),
        best_iteration=best_iteration,
        trace_min_rate=np.asarray(trace_min_rate),
        trace_budget_overrun=np.asarray(trace_budget_overrun),
        trace_interference_overrun=np.asarray(trace_interference_overrun),
    )


def solve_oaop(
    config: NetworkConfig,
    topology: Topology,
    channels: ChannelRealization,
    options: SolverOptions | None = None,
) -> SolverReport:
    """Joint assignment and power optimization (the full scheme)."""
    return run_dual_loop(config, topology, channels, options or SolverOptions(), None)


def trace_rows(report: SolverReport, num_users: int, num_bs: int):
    """Header and rows of the per-iteration convergence trace.

    Row 0 holds the initial multipliers (min-rate and overruns are NaN there,
    since no primal iterate exists yet).
    """
    header = (
        ["iteration"]
        + [f"lam_{a}" for a in range(num_users)]
        + [f"eta_{b}" for b in range(num_bs)]
        + ["v", "min_rate", "budget_overrun", "interference_overrun"]
    )
    rows = []
    for i, duals in enumerate(report.dual_trajectory):
        if i == 0:
            extras = [float("nan")] * 3
        else:
            extras = [
                float(report.trace_min_rate[i - 1]),
                float(report.trace_budget_overrun[i - 1]),
                float(report.trace_interference_overrun[i - 1]),
            ]
        rows.append([i] + [float(x) for x in duals] + extras)
    return header, rows


def write_trace_csv(report: SolverReport, path, num_users: int, num_bs: int) -> None:
    """Write the convergence trace as CSV for plotting."""
    header, rows = trace_rows(report, num_users, num_bs)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
