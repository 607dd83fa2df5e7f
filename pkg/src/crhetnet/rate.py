"""SINR, per-user rates, and the two headline metrics (PR and sum throughput)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AssignmentError, UndefinedMetricError
from .model import MACRO, Assignment, ChannelRealization, NetworkConfig, Topology, validate_assignment


def sinr(p, g, p_interferer, f, sigma2):
    """Signal-to-interference-plus-noise ratio p*g / (p_interferer*f + sigma2).

    Accepts scalars or broadcastable arrays; sigma2 > 0 keeps the
    denominator positive.
    """
    return p * g / (p_interferer * f + sigma2)


def user_rate(sinr_value):
    """Achievable spectral efficiency log2(1 + SINR) in bits/s/Hz."""
    return np.log2(1.0 + sinr_value)


def peak_to_average_ratio(rates) -> float:
    """Peak rate divided by mean rate; 1.0 means perfectly even rates."""
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        raise UndefinedMetricError("peak-to-average ratio of an empty rate vector")
    total = float(rates.sum())
    if total <= 0.0:
        raise UndefinedMetricError("peak-to-average ratio undefined for all-zero rates")
    return float(rates.max() / (total / rates.size))


def sum_throughput(rates) -> float:
    """Sum of per-user rates in bits/s/Hz; empty input is an error."""
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        raise UndefinedMetricError("sum throughput of an empty rate vector")
    return float(rates.sum())


def percentage_gap(x: float, y: float) -> float:
    """Symmetric percentage gap 100*|x - y| / max(x, y); 0 when both are 0."""
    hi = max(x, y)
    if hi <= 0.0:
        return 0.0
    return 100.0 * abs(x - y) / hi


@dataclass(frozen=True, eq=False)
class InterferenceState:
    """Cross-tier interference seen on each candidate slot under an allocation.

    ``interferer_power[a, c, b]`` is the transmit power of the BS that would
    interfere with user a if served on (c, b); ``effective_noise`` adds the
    noise floor: interferer_power * f + sigma2.
    """

    effective_noise: np.ndarray
    interferer_power: np.ndarray

    def __post_init__(self):
        self.effective_noise.setflags(write=False)
        self.interferer_power.setflags(write=False)


def interference_state(
    assignment: Assignment,
    powers: np.ndarray,
    channels: ChannelRealization,
    config: NetworkConfig,
    topology: Topology,
) -> InterferenceState:
    """Attribute cross-tier interferer powers for every candidate slot.

    A pico-served user on channel c is interfered by the macro's power on c;
    a macro-served user on channel c is interfered by the pico owning c, if
    that pico is transmitting on c. Picos never interfere with each other.
    """
    num_users, num_channels, num_bs = channels.shape
    tx = np.zeros((num_channels, num_bs))
    tx[assignment.channel, assignment.bs] = powers

    owner = topology.owner_of_channel()
    pprime = np.zeros((num_channels, num_bs))
    owned = owner >= 0
    pprime[owned, MACRO] = tx[owned, owner[owned]]
    pprime[:, 1:] = tx[:, MACRO][:, None]

    interferer_power = np.broadcast_to(pprime, channels.shape).copy()
    effective_noise = interferer_power * channels.f + config.noise_psd
    return InterferenceState(effective_noise=effective_noise, interferer_power=interferer_power)


@dataclass(frozen=True, eq=False)
class RateVector:
    """Per-user rates plus the derived min-rate, sum-rate and PR metrics."""

    rates: np.ndarray
    min_rate: float
    sum_rate: float
    pr: float

    def __post_init__(self):
        self.rates.setflags(write=False)

    @classmethod
    def from_rates(cls, rates: np.ndarray) -> "RateVector":
        rates = np.asarray(rates, dtype=float)
        total = float(rates.sum())
        # PR has no value when nobody gets any rate; keep NaN so callers that
        # only compare min-rates are not forced to special-case dead iterates.
        pr = float(rates.max() / (total / rates.size)) if total > 0 else float("nan")
        return cls(rates=rates, min_rate=float(rates.min()), sum_rate=total, pr=pr)


def evaluate(
    assignment: Assignment,
    powers: np.ndarray,
    channels: ChannelRealization,
    config: NetworkConfig,
    topology: Topology,
) -> RateVector:
    """Compute every user's rate under an allocation, with exact cross-tier coupling."""
    validate_assignment(assignment, config, topology)
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (config.num_users,):
        raise AssignmentError(f"powers must have shape ({config.num_users},), got {powers.shape}")
    if np.any(powers < 0) or not np.all(np.isfinite(powers)):
        raise AssignmentError("powers must be finite and nonnegative")

    state = interference_state(assignment, powers, channels, config, topology)
    users = np.arange(config.num_users)
    ch, bs = assignment.channel, assignment.bs
    xi = state.effective_noise[users, ch, bs]
    rates = user_rate(powers * channels.g[users, ch, bs] / xi)
    return RateVector.from_rates(rates)
