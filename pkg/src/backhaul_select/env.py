"""Episodic slice-to-backhaul allocation environment.

An episode walks the intervals of one dataset split in time order.  In
each interval the congested station's slices are placed one at a time in
ascending sid order; each placement is one step.  Reservations live only
for the interval: the ledger is rebuilt from the neighbours' access loads
whenever the interval changes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .net_model import (DEFAULT_PACKET_BITS, BandwidthLedger, CapacityError, Direction,
                        path_latency)
from .scenario import Scenario
from .traffic import DatasetSplit

N_ACTIONS = 8
OBS_SIZE = 36
THROUGHPUT_SCALE_MBPS = 1000.0
LATENCY_CAP_MS = 10000.0

ACTION_NAMES = ["satellite", "wired"] + [f"BS{n}" for n in range(2, 8)]


class ConfigurationError(ValueError):
    pass


class FailureCause(str, Enum):
    NONE = "none"
    THROUGHPUT = "throughput"
    LATENCY = "latency"


@dataclass
class StepOutcome:
    reward: int
    observation: np.ndarray
    terminal: bool
    failure_cause: FailureCause
    failure_direction: Direction | None
    t: int
    sid: int
    action: int
    dl_latency_ms: float
    ul_latency_ms: float
    interval_end: bool = False


def norm_throughput(mbps: float) -> float:
    return min(max(mbps, 0.0), THROUGHPUT_SCALE_MBPS) / THROUGHPUT_SCALE_MBPS


def norm_latency(ms: float) -> float:
    if math.isinf(ms):
        return 1.0
    return min(max(ms, 0.0), LATENCY_CAP_MS) / LATENCY_CAP_MS


def admit(ledger: BandwidthLedger, option: dict, requirement, packet_bits=DEFAULT_PACKET_BITS):
    """Try to place one slice on one backhaul option.

    ``requirement`` is (thdl, thul, ddl, dul).  Throughput is checked in
    both directions (DL, then UL) before latency; latency includes the
    slice's own load.  On failure nothing stays reserved.

    Returns (cause, direction, dl_latency, ul_latency, reservations).
    """
    thdl, thul, ddl, dul = requirement
    dl_path, ul_path = option[Direction.DL], option[Direction.UL]
    held = []
    cause, where = FailureCause.NONE, None
    for direction, path, demand in ((Direction.DL, dl_path, thdl), (Direction.UL, ul_path, thul)):
        if path is None:
            cause, where = FailureCause.THROUGHPUT, direction
            break
        try:
            held.append(ledger.try_reserve(path, direction, demand))
        except CapacityError:
            cause, where = FailureCause.THROUGHPUT, direction
            break
    dl_lat = path_latency(dl_path, ledger, packet_bits)
    ul_lat = path_latency(ul_path, ledger, packet_bits)
    if cause is FailureCause.NONE:
        if dl_lat > ddl:
            cause, where = FailureCause.LATENCY, Direction.DL
        elif ul_lat > dul:
            cause, where = FailureCause.LATENCY, Direction.UL
    if cause is not FailureCause.NONE:
        for rec in reversed(held):
            ledger.release(rec)
        held = []
    return cause, where, dl_lat, ul_lat, held


class BackhaulEnv:
    def __init__(self, scenario: Scenario, split: DatasetSplit,
                 packet_bits: float = DEFAULT_PACKET_BITS):
        self.scenario = scenario
        self.split = split
        self.packet_bits = packet_bits
        self.options = scenario.topology.candidate_paths(scenario.bs)
        if len(self.options) != N_ACTIONS:
            raise ConfigurationError(
                f"topology offers {len(self.options)} backhaul options, expected {N_ACTIONS}")
        self._access = [scenario.access_loads(t) for t in range(scenario.n_intervals)]
        self.intervals: tuple[int, ...] = ()
        self.ledger: BandwidthLedger | None = None
        self.held: dict[int, list] = {}
        self._i = self._k = 0
        self.done = True

    @property
    def n_slices(self) -> int:
        return self.scenario.n_slices

    @property
    def episode_length(self) -> int:
        return len(self.intervals) * self.n_slices

    @property
    def t(self) -> int:
        return self.intervals[self._i]

    @property
    def slice_pos(self) -> int:
        return self._k

    @property
    def sid(self) -> int:
        return self.scenario.slices[self._k].sid

    def fresh_ledger(self, t: int) -> BandwidthLedger:
        return BandwidthLedger(self.scenario.topology, self._access[t])

    def reset(self, part: str = "train", intervals=None) -> np.ndarray:
        self.intervals = tuple(intervals) if intervals is not None else self.split.part(part)
        if not self.intervals or not self.n_slices:
            raise ConfigurationError(f"split part {part!r} has nothing to allocate")
        self._i = self._k = 0
        self.ledger = self.fresh_ledger(self.t)
        self.held = {}
        self.done = False
        return self.observe()

    def observe(self) -> np.ndarray:
        if self.done:
            raise RuntimeError("episode is over; call reset()")
        thdl, thul, ddl, dul = self.scenario.requirement(self.t, self._k)
        obs = np.empty(OBS_SIZE)
        obs[0:4] = (norm_throughput(thdl), norm_throughput(thul),
                    norm_latency(ddl), norm_latency(dul))
        ledger, bits = self.ledger, self.packet_bits
        for a, option in enumerate(self.options):
            dl, ul = option[Direction.DL], option[Direction.UL]
            obs[4 + 2 * a] = norm_throughput(ledger.path_free_capacity(dl))
            obs[5 + 2 * a] = norm_throughput(ledger.path_free_capacity(ul))
            obs[20 + 2 * a] = norm_latency(path_latency(dl, ledger, bits))
            obs[21 + 2 * a] = norm_latency(path_latency(ul, ledger, bits))
        return obs

    def requirement(self):
        return self.scenario.requirement(self.t, self._k)

    def probe(self, action: int) -> tuple[FailureCause, Direction | None]:
        """Outcome ``action`` would have, without changing any state."""
        cause, where, *_ = admit(self.ledger.copy(), self.options[action],
                                 self.requirement(), self.packet_bits)
        return cause, where

    def step(self, action: int) -> StepOutcome:
        if self.done:
            raise RuntimeError("step() called on a finished episode")
        action = int(action)
        if not 0 <= action < N_ACTIONS:
            raise ValueError(f"action must be in 0..{N_ACTIONS - 1}, got {action}")
        t, sid = self.t, self.sid
        cause, where, dl_lat, ul_lat, held = admit(self.ledger, self.options[action],
                                                   self.requirement(), self.packet_bits)
        if held:
            self.held[sid] = held
        self._k += 1
        interval_end = self._k == self.n_slices
        if interval_end:
            self._k = 0
            self._i += 1
            if self._i == len(self.intervals):
                self.done = True
            else:
                self.ledger = self.fresh_ledger(self.t)
                self.held = {}
        obs = np.zeros(OBS_SIZE) if self.done else self.observe()
        return StepOutcome(int(cause is FailureCause.NONE), obs, self.done, cause, where,
                           t, sid, action, dl_lat, ul_lat, interval_end)

    def max_episode_reward(self, part: str = "train") -> int:
        from .baselines import split_optimum
        return split_optimum(self.scenario, self.split.part(part), self.packet_bits).total
