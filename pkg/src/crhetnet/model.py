"""Two-tier underlay network model: configuration, channel topology, fading draws.

Conventions used throughout the package:

* all indices are 0-based,
* BS 0 is the macro cell, BSs ``1 .. num_bs-1`` are picos,
* channel gain arrays are indexed ``[user, channel, bs]`` where ``bs`` is the
  serving BS of the link being described.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AssignmentError, InvalidConfigError

MACRO = 0


@dataclass(frozen=True)
class NetworkConfig:
    """Static parameters of the secondary network and its primary-protection cap.

    Per-BS budgets derive from ``macro_power`` (BS 0) and ``pico_power``
    (every other BS). Powers are in watts, ``noise_psd`` is the per-user
    noise power in watts.
    """

    num_users: int
    num_bs: int
    num_channels: int
    macro_power: float = 20.0
    pico_power: float = 1.0
    interference_threshold: float = 30.0
    noise_psd: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if self.num_users < 1:
            raise InvalidConfigError(f"need at least one user, got {self.num_users}")
        if self.num_bs < 2:
            raise InvalidConfigError(f"need a macro plus at least one pico, got num_bs={self.num_bs}")
        if self.num_channels < self.num_bs - 1:
            raise InvalidConfigError(
                f"each pico needs at least one channel: num_channels={self.num_channels} "
                f"< num_bs-1={self.num_bs - 1}"
            )
        for name in ("macro_power", "pico_power", "interference_threshold", "noise_psd"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InvalidConfigError(f"{name} must be finite and > 0, got {value}")
        if not 0 <= self.rng_seed < 2**64:
            raise InvalidConfigError(f"rng_seed must fit in 64 unsigned bits, got {self.rng_seed}")

    @property
    def bs_budgets(self) -> np.ndarray:
        """Per-BS power budgets, shape (num_bs,)."""
        budgets = np.full(self.num_bs, self.pico_power, dtype=float)
        budgets[MACRO] = self.macro_power
        return budgets


@dataclass(frozen=True)
class Topology:
    """Which channels each BS may serve.

    The macro uses every channel; picos hold pairwise-disjoint subsets of the
    macro's set, so picos never interfere with each other while each shares
    its channels with the macro.
    """

    pico_channel_sets: tuple[frozenset[int], ...]
    macro_channel_set: frozenset[int]

    def __post_init__(self):
        seen: set[int] = set()
        for idx, chans in enumerate(self.pico_channel_sets):
            if chans & seen:
                raise InvalidConfigError(f"pico {idx + 1} overlaps another pico's channels")
            if not chans <= self.macro_channel_set:
                raise InvalidConfigError(f"pico {idx + 1} uses channels outside the macro set")
            seen |= chans

    @property
    def num_bs(self) -> int:
        return len(self.pico_channel_sets) + 1

    @property
    def num_channels(self) -> int:
        return len(self.macro_channel_set)

    def channels_of(self, bs: int) -> frozenset[int]:
        if bs == MACRO:
            return self.macro_channel_set
        return self.pico_channel_sets[bs - 1]

    def owner_of_channel(self) -> np.ndarray:
        """Pico BS index owning each channel, shape (num_channels,); -1 if unowned."""
        owner = np.full(self.num_channels, -1, dtype=np.int64)
        for idx, chans in enumerate(self.pico_channel_sets):
            for c in chans:
                owner[c] = idx + 1
        return owner

    def legal_mask(self) -> np.ndarray:
        """Boolean (num_channels, num_bs) mask of slots a user may occupy."""
        mask = np.zeros((self.num_channels, self.num_bs), dtype=bool)
        mask[sorted(self.macro_channel_set), MACRO] = True
        for idx, chans in enumerate(self.pico_channel_sets):
            mask[sorted(chans), idx + 1] = True
        return mask

    def legal_slots(self) -> list[tuple[int, int]]:
        """All legal (bs, channel) slots in (bs, channel) lexicographic order."""
        slots = [(MACRO, c) for c in sorted(self.macro_channel_set)]
        for idx, chans in enumerate(self.pico_channel_sets):
            slots.extend((idx + 1, c) for c in sorted(chans))
        return slots


def build_topology(config: NetworkConfig) -> Topology:
    """Partition the channels among the picos as evenly as possible, in index order.

    The first ``num_channels % num_picos`` picos receive one extra channel;
    blocks are contiguous, so the result is deterministic.
    """
    num_picos = config.num_bs - 1
    base, extra = divmod(config.num_channels, num_picos)
    sets = []
    start = 0
    for p in range(num_picos):
        size = base + (1 if p < extra else 0)
        sets.append(frozenset(range(start, start + size)))
        start += size
    return Topology(
        pico_channel_sets=tuple(sets),
        macro_channel_set=frozenset(range(config.num_channels)),
    )


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One fading draw: direct gains g, cross-tier gains f, gains-to-primary h.

    Every array has shape (num_users, num_channels, num_bs), is nonnegative
    and finite, and is drawn for every triple (including topology-illegal
    slots) so a seed always reproduces the same realization regardless of
    the topology in force.
    """

    g: np.ndarray
    f: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        shape = self.g.shape
        for name in ("g", "f", "h"):
            arr = getattr(self, name)
            if arr.shape != shape or arr.ndim != 3:
                raise InvalidConfigError(f"gain array {name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise InvalidConfigError(f"gain array {name} must be finite and nonnegative")
            arr.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.g.shape


def draw_channels(config: NetworkConfig, topology: Topology) -> ChannelRealization:
    """Draw all gains i.i.d. Exponential(mean 1) from the config's seed.

    Squared magnitudes of unit-variance Rayleigh fading are unit-mean
    exponential; no path loss or geometry is modelled. The draw order
    (g, then f, then h) is fixed, so equal seeds give bit-identical
    realizations.
    """
    if topology.num_bs != config.num_bs or topology.num_channels != config.num_channels:
        raise InvalidConfigError("topology does not match config dimensions")
    rng = np.random.default_rng(config.rng_seed)
    shape = (config.num_users, config.num_channels, config.num_bs)
    g = rng.exponential(1.0, shape)
    f = rng.exponential(1.0, shape)
    h = rng.exponential(1.0, shape)
    return ChannelRealization(g=g, f=f, h=h)


@dataclass(frozen=True, eq=False)
class Assignment:
    """Each user's (channel, bs) slot, as two int arrays of shape (num_users,)."""

    channel: np.ndarray
    bs: np.ndarray

    def __post_init__(self):
        channel = np.asarray(self.channel, dtype=np.int64)
        bs = np.asarray(self.bs, dtype=np.int64)
        if channel.shape != bs.shape or channel.ndim != 1:
            raise AssignmentError("channel and bs must be 1-D arrays of equal length")
        object.__setattr__(self, "channel", channel)
        object.__setattr__(self, "bs", bs)
        channel.setflags(write=False)
        bs.setflags(write=False)

    @property
    def num_users(self) -> int:
        return self.channel.shape[0]

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.channel.tolist(), self.bs.tolist()))

    def to_alpha(self, config: NetworkConfig) -> np.ndarray:
        """Binary occupancy tensor of shape (num_users, num_channels, num_bs)."""
        alpha = np.zeros((config.num_users, config.num_channels, config.num_bs), dtype=np.int64)
        alpha[np.arange(self.num_users), self.channel, self.bs] = 1
        return alpha


def validate_assignment(assignment: Assignment, config: NetworkConfig, topology: Topology) -> None:
    """Raise AssignmentError unless the assignment satisfies all invariants.

    Checks: one slot per user (structural), indices in range, topology
    legality, and single occupancy of every (channel, bs) pair.
    """
    if assignment.num_users != config.num_users:
        raise AssignmentError(
            f"assignment covers {assignment.num_users} users, config has {config.num_users}"
        )
    ch, bs = assignment.channel, assignment.bs
    if np.any(ch < 0) or np.any(ch >= config.num_channels):
        raise AssignmentError("channel index out of range")
    if np.any(bs < 0) or np.any(bs >= config.num_bs):
        raise AssignmentError("BS index out of range")
    legal = topology.legal_mask()
    if not np.all(legal[ch, bs]):
        bad = int(np.nonzero(~legal[ch, bs])[0][0])
        raise AssignmentError(
            f"user {bad} assigned illegal slot (channel={int(ch[bad])}, bs={int(bs[bad])})"
        )
    flat = ch * config.num_bs + bs
    if np.unique(flat).size != flat.size:
        raise AssignmentError("two users share the same (channel, bs) slot")
