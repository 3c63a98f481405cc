"""Reference policies: exhaustive-search optimum and uniform random."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .env import N_ACTIONS, BackhaulEnv, FailureCause, admit
from .net_model import DEFAULT_PACKET_BITS, BandwidthLedger


@dataclass
class IntervalOptimum:
    interval: int
    best_assignment: tuple[int, ...]
    count: int
    infeasible_slices: list[int]


@dataclass
class OracleResult:
    intervals: list[IntervalOptimum] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(r.count for r in self.intervals)

    @property
    def infeasible(self) -> list[tuple[int, int]]:
        return [(r.interval, sid) for r in self.intervals for sid in r.infeasible_slices]

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "intervals": [
                {"interval": r.interval, "best_assignment": list(r.best_assignment),
                 "count": r.count, "infeasible_slices": r.infeasible_slices}
                for r in self.intervals
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OracleResult":
        return cls([IntervalOptimum(r["interval"], tuple(r["best_assignment"]), r["count"],
                                    list(r["infeasible_slices"])) for r in d["intervals"]])


def exhaustive_optimum(scenario, t: int, packet_bits=DEFAULT_PACKET_BITS) -> IntervalOptimum:
    """Best joint link assignment for interval ``t`` under the fixed sid order.

    Depth-first over all (N_BS + 1) ** N_s assignments in lexicographic
    order, keeping the first strict improvement, so ties resolve to the
    lexicographically smallest tuple.  Two prunings keep it exact:
    branches that cannot beat the incumbent are cut, and since a rejected
    slice leaves the ledger untouched, only the first rejected action at a
    level needs its subtree explored (later rejected actions would
    reproduce it with a larger tuple).
    """
    options = scenario.topology.candidate_paths(scenario.bs)
    n = scenario.n_slices
    reqs = [scenario.requirement(t, k) for k in range(n)]
    root = _fresh_ledger(scenario, t)
    best_count, best = -1, None

    def search(depth, ledger, prefix, got):
        nonlocal best_count, best
        if got + (n - depth) <= best_count:
            return
        if depth == n:
            best_count, best = got, tuple(prefix)
            return
        rejected_seen = False
        for a in range(N_ACTIONS):
            trial = ledger.copy()
            cause, *_ = admit(trial, options[a], reqs[depth], packet_bits)
            if cause is FailureCause.NONE:
                search(depth + 1, trial, prefix + [a], got + 1)
            elif not rejected_seen:
                rejected_seen = True
                search(depth + 1, trial, prefix + [a], got)
            if best_count == n:
                return

    search(0, root, [], 0)
    infeasible = _rejected_sids(scenario, t, best, options, reqs, packet_bits)
    return IntervalOptimum(t, best, best_count, infeasible)


def _fresh_ledger(scenario, t) -> BandwidthLedger:
    return BandwidthLedger(scenario.topology, scenario.access_loads(t))


def _rejected_sids(scenario, t, assignment, options, reqs, packet_bits) -> list[int]:
    ledger = _fresh_ledger(scenario, t)
    out = []
    for k, a in enumerate(assignment):
        cause, *_ = admit(ledger, options[a], reqs[k], packet_bits)
        if cause is not FailureCause.NONE:
            out.append(scenario.slices[k].sid)
    return out


def split_optimum(scenario, intervals, packet_bits=DEFAULT_PACKET_BITS) -> OracleResult:
    return OracleResult([exhaustive_optimum(scenario, t, packet_bits) for t in sorted(intervals)])


@dataclass
class RandomPolicyStats:
    mean: float
    std: float
    rewards: list[int]


def random_policy_reward(env: BackhaulEnv, split_part: str, n_runs: int = 100,
                         rng_seed: int = 0) -> RandomPolicyStats:
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    rng = np.random.default_rng(rng_seed)
    rewards = []
    for _ in range(n_runs):
        env.reset(split_part)
        total = 0
        while not env.done:
            total += env.step(int(rng.integers(N_ACTIONS))).reward
        rewards.append(total)
    arr = np.asarray(rewards, dtype=float)
    return RandomPolicyStats(float(arr.mean()), float(arr.std()), rewards)


def oracle_report(results: dict[str, OracleResult]) -> str:
    return json.dumps({part: r.to_dict() for part, r in results.items()}, indent=2) + "\n"
