"""Daily demand timetables for the congested station's slices and the
access load of its neighbours, plus the train/validation/test split.

A day has 96 fifteen-minute intervals; interval ``k`` starts at ``k * 15``
minutes after midnight.  Curves are built from a base level plus
plateau-with-ramp bumps whose windows may wrap past midnight, with a small
seeded multiplicative jitter on top.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

INTERVALS_PER_DAY = 96
MINUTES_PER_INTERVAL = 15
MAX_LOAD_MBPS = 1000.0

TRAIN_SIZE, VALIDATION_SIZE, TEST_SIZE = 67, 9, 20

# separate RNG streams so slice and load generation never share draws
_SLICE_STREAM, _LOAD_STREAM, _SPLIT_STREAM = 11, 13, 17


def interval_of(hhmm: str) -> int:
    h, m = hhmm.split(":")
    minutes = int(h) * 60 + int(m)
    if minutes % MINUTES_PER_INTERVAL:
        raise ValueError(f"{hhmm} is not on a 15-minute boundary")
    return (minutes // MINUTES_PER_INTERVAL) % INTERVALS_PER_DAY


def clock(t: int) -> str:
    minutes = (t % INTERVALS_PER_DAY) * MINUTES_PER_INTERVAL
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def window(start: str, stop: str) -> list[int]:
    """Interval indices in [start, stop), wrapping past midnight."""
    a, b = interval_of(start), interval_of(stop)
    n = (b - a) % INTERVALS_PER_DAY
    return [(a + i) % INTERVALS_PER_DAY for i in range(n)]


@dataclass
class Bump:
    """Plateau added over intervals [start, start + length) (mod 96).

    The first and last ``ramp`` intervals rise linearly from ``floor`` times
    the height to the full height.
    """

    start: int
    length: int
    height: float
    floor: float = 1.0
    ramp: int = 0

    def render(self) -> np.ndarray:
        out = np.zeros(INTERVALS_PER_DAY)
        for j in range(self.length):
            edge = min(j, self.length - 1 - j)
            if self.ramp and edge < self.ramp:
                frac = self.floor + (1.0 - self.floor) * edge / self.ramp
            else:
                frac = 1.0
            out[(self.start + j) % INTERVALS_PER_DAY] += self.height * frac
        return out


@dataclass
class Curve:
    base: float
    bumps: list[Bump] = field(default_factory=list)
    jitter: float = 0.0

    def render(self, rng: np.random.Generator) -> np.ndarray:
        values = np.full(INTERVALS_PER_DAY, float(self.base))
        for bump in self.bumps:
            values += bump.render()
        # draw even when jitter == 0 so streams stay aligned across edits
        noise = rng.uniform(-1.0, 1.0, INTERVALS_PER_DAY)
        values *= 1.0 + self.jitter * noise
        return np.round(np.clip(values, 0.0, MAX_LOAD_MBPS), 1)

    @classmethod
    def from_dict(cls, d: dict) -> "Curve":
        return cls(d["base"], [Bump(**b) for b in d.get("bumps", [])], d.get("jitter", 0.0))


@dataclass
class SliceSpec:
    sid: int
    name: str
    ddl_ms: float
    dul_ms: float
    dl: Curve
    ul: Curve

    @classmethod
    def from_dict(cls, d: dict) -> "SliceSpec":
        return cls(d["sid"], d["name"], d["ddl_ms"], d["dul_ms"],
                   Curve.from_dict(d["dl"]), Curve.from_dict(d["ul"]))


@dataclass
class LoadSpec:
    profile: int
    dl: Curve
    ul: Curve

    @classmethod
    def from_dict(cls, d: dict) -> "LoadSpec":
        return cls(d["profile"], Curve.from_dict(d["dl"]), Curve.from_dict(d["ul"]))


@dataclass(frozen=True)
class SliceProfileEntry:
    t: int
    bs: int
    sid: int
    thdl: float
    thul: float
    ddl: float
    dul: float


@dataclass(frozen=True)
class BsLoadEntry:
    t: int
    thdl: float
    thul: float


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[int, ...]
    validation: tuple[int, ...]
    test: tuple[int, ...]

    def part(self, name: str) -> tuple[int, ...]:
        if name not in ("train", "validation", "test"):
            raise ValueError(f"unknown split part {name!r}")
        return getattr(self, name)


def _bump(start: str, stop: str, height: float, floor: float = 1.0, ramp: int = 0) -> Bump:
    a = interval_of(start)
    return Bump(a, (interval_of(stop) - a) % INTERVALS_PER_DAY, height, floor, ramp)


# Aggregate UL of the four slices exceeds 1 Gbps over 04:30-14:30 and
# aggregate DL over 13:45-01:00.  The 20:00-21:30 eMBB DL surge cannot fit
# on any neighbour and leaves no wired room for uRLLC, so one slice per
# such interval is unallocatable.
_UL_PEAK = ("04:30", "14:30")
_DL_PEAK = ("13:45", "01:00")

SATELLITE_SLICES = [
    SliceSpec(1, "eMBB", 100.0, 100.0,
              dl=Curve(250.0, [_bump(*_DL_PEAK, 380.0, 0.7, 3),
                               _bump("20:00", "21:30", 330.0)], 0.02),
              ul=Curve(220.0, [_bump(*_UL_PEAK, 380.0, 0.7, 3)], 0.03)),
    SliceSpec(2, "eMTC", 10000.0, 10000.0,
              dl=Curve(150.0, [_bump(*_DL_PEAK, 300.0, 0.7, 3)], 0.03),
              ul=Curve(150.0, [_bump(*_UL_PEAK, 320.0, 0.7, 3)], 0.03)),
    SliceSpec(3, "uRLLC", 1.0, 1.0, dl=Curve(100.0), ul=Curve(100.0)),
    SliceSpec(4, "IoT", 300.0, 300.0,
              dl=Curve(100.0, [], 0.03),
              ul=Curve(120.0, [_bump("06:00", "19:00", 60.0, 0.5, 4)], 0.03)),
]

# Terrestrial-only variant: every slice fits somewhere in every interval.
NO_SATELLITE_SLICES = [
    SliceSpec(1, "eMBB", 100.0, 100.0,
              dl=Curve(300.0, [_bump(*_DL_PEAK, 300.0, 0.7, 3)], 0.03),
              ul=Curve(250.0, [_bump(*_UL_PEAK, 300.0, 0.7, 3)], 0.03)),
    SliceSpec(2, "eMTC", 10000.0, 10000.0,
              dl=Curve(150.0, [_bump(*_DL_PEAK, 280.0, 0.7, 3)], 0.03),
              ul=Curve(150.0, [_bump(*_UL_PEAK, 280.0, 0.7, 3)], 0.03)),
    SliceSpec(3, "uRLLC", 1.0, 1.0, dl=Curve(100.0), ul=Curve(100.0)),
]

# 1: heavy only for short periods, 2: light all day, 3: heavy around noon
LOAD_PROFILES = [
    LoadSpec(1,
             dl=Curve(200.0, [_bump("08:00", "09:00", 700.0), _bump("19:00", "20:00", 700.0)], 0.03),
             ul=Curve(160.0, [_bump("08:00", "09:00", 640.0), _bump("19:00", "20:00", 640.0)], 0.03)),
    LoadSpec(2,
             dl=Curve(150.0, [_bump("07:00", "22:00", 200.0, 0.3, 8)], 0.03),
             ul=Curve(120.0, [_bump("07:00", "22:00", 180.0, 0.3, 8)], 0.03)),
    LoadSpec(3,
             dl=Curve(250.0, [_bump("09:00", "16:00", 680.0, 0.4, 8)], 0.03),
             ul=Curve(220.0, [_bump("09:00", "16:00", 660.0, 0.4, 8)], 0.03)),
]

SCENARIOS = {
    "with_satellite_4slices": (SATELLITE_SLICES, True),
    "no_satellite_3slices": (NO_SATELLITE_SLICES, False),
}


def slice_specs(scenario: str) -> list[SliceSpec]:
    try:
        return SCENARIOS[scenario][0]
    except KeyError:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}") from None


def assign_profile(bs_index: int) -> int:
    """Load profile (1..3) of neighbour ``bs_index`` (2..7): ((b-1) mod 3) + 1."""
    if not 2 <= bs_index <= 7:
        raise ValueError(f"neighbour index must be in 2..7, got {bs_index}")
    return (bs_index - 1) % 3 + 1


def render_slice_specs(specs: list[SliceSpec], rng_seed: int, bs: int = 1) -> list[SliceProfileEntry]:
    rng = np.random.default_rng([rng_seed, _SLICE_STREAM])
    entries = []
    for spec in sorted(specs, key=lambda s: s.sid):
        dl, ul = spec.dl.render(rng), spec.ul.render(rng)
        entries.extend(SliceProfileEntry(t, bs, spec.sid, float(dl[t]), float(ul[t]),
                                         spec.ddl_ms, spec.dul_ms)
                       for t in range(INTERVALS_PER_DAY))
    return entries


def generate_slice_profiles(scenario: str, rng_seed: int) -> list[SliceProfileEntry]:
    return render_slice_specs(slice_specs(scenario), rng_seed)


def render_load_specs(specs: list[LoadSpec], rng_seed: int) -> dict[int, list[BsLoadEntry]]:
    rng = np.random.default_rng([rng_seed, _LOAD_STREAM])
    out = {}
    for spec in sorted(specs, key=lambda s: s.profile):
        dl, ul = spec.dl.render(rng), spec.ul.render(rng)
        out[spec.profile] = [BsLoadEntry(t, float(dl[t]), float(ul[t]))
                             for t in range(INTERVALS_PER_DAY)]
    return out


def generate_bs_load_profiles(rng_seed: int) -> dict[int, list[BsLoadEntry]]:
    return render_load_specs(LOAD_PROFILES, rng_seed)


def split_dataset(rng_seed: int, n_intervals: int = INTERVALS_PER_DAY) -> DatasetSplit:
    """Seeded disjoint 67/9/20 partition of the day's intervals."""
    if n_intervals != TRAIN_SIZE + VALIDATION_SIZE + TEST_SIZE:
        raise ValueError(f"expected {INTERVALS_PER_DAY} intervals, got {n_intervals}")
    order = np.random.default_rng([rng_seed, _SPLIT_STREAM]).permutation(n_intervals)
    a, b = TRAIN_SIZE, TRAIN_SIZE + VALIDATION_SIZE
    return DatasetSplit(tuple(sorted(int(t) for t in order[:a])),
                        tuple(sorted(int(t) for t in order[a:b])),
                        tuple(sorted(int(t) for t in order[b:])))


def specs_to_dict(slices: list[SliceSpec], loads: list[LoadSpec]) -> dict:
    return {"slices": [asdict(s) for s in slices], "load_profiles": [asdict(l) for l in loads]}
