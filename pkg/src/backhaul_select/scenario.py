"""A complete simulation input: topology, slice timetable, neighbour loads.

On disk a scenario is three files in one directory::

    scenario.json   nodes, links, slice metadata, profile assignment
    slices.csv      t,bs,sid,thdl_mbps,thul_mbps,ddl_ms,dul_ms
    bs_loads.csv    t,profile,thdl_mbps,thul_mbps
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import traffic
from .net_model import CONGESTED_BS, Topology, build_default_topology
from .traffic import BsLoadEntry, SliceProfileEntry

SCENARIO_FILE, SLICES_FILE, LOADS_FILE = "scenario.json", "slices.csv", "bs_loads.csv"


@dataclass(frozen=True)
class SliceInfo:
    sid: int
    name: str


@dataclass
class Scenario:
    name: str
    topology: Topology
    slices: list[SliceInfo]
    # arrays indexed [slice position, t]
    thdl: np.ndarray
    thul: np.ndarray
    ddl: np.ndarray
    dul: np.ndarray
    # profile id -> (dl, ul) arrays over t
    loads: dict[int, tuple[np.ndarray, np.ndarray]]
    assignment: dict[int, int]
    bs: int = CONGESTED_BS
    params: dict = field(default_factory=dict)

    @property
    def n_slices(self) -> int:
        return len(self.slices)

    @property
    def n_intervals(self) -> int:
        return self.thdl.shape[1]

    def requirement(self, t: int, k: int) -> tuple[float, float, float, float]:
        """(thdl, thul, ddl, dul) of the k-th slice (sid order) at interval t."""
        return (float(self.thdl[k, t]), float(self.thul[k, t]),
                float(self.ddl[k, t]), float(self.dul[k, t]))

    def access_loads(self, t: int) -> dict[tuple[int, int], float]:
        """Neighbour access traffic mapped onto the shared wireless hops."""
        out = {}
        for nb, profile in self.assignment.items():
            dl, ul = self.loads[profile]
            if self.topology.has_link(nb, self.bs):
                out[(nb, self.bs)] = float(dl[t])
            if self.topology.has_link(self.bs, nb):
                out[(self.bs, nb)] = float(ul[t])
        return out

    def slice_entries(self) -> list[SliceProfileEntry]:
        return [SliceProfileEntry(t, self.bs, s.sid, *self.requirement(t, k))
                for k, s in enumerate(self.slices) for t in range(self.n_intervals)]

    def load_entries(self) -> dict[int, list[BsLoadEntry]]:
        return {p: [BsLoadEntry(t, float(dl[t]), float(ul[t])) for t in range(len(dl))]
                for p, (dl, ul) in sorted(self.loads.items())}

    # -- persistence -------------------------------------------------------

    def save(self, directory) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        meta = {
            "name": self.name,
            "bs": self.bs,
            **self.topology.to_dict(),
            "slices": [{"sid": s.sid, "name": s.name} for s in self.slices],
            "assignment": {str(k): v for k, v in sorted(self.assignment.items())},
            "generator": self.params,
        }
        (d / SCENARIO_FILE).write_text(json.dumps(meta, indent=2) + "\n")
        write_slice_csv(d / SLICES_FILE, self.slice_entries())
        write_load_csv(d / LOADS_FILE, self.load_entries())
        return d

    @classmethod
    def load(cls, directory) -> "Scenario":
        d = Path(directory)
        meta = json.loads((d / SCENARIO_FILE).read_text())
        topology = Topology.from_dict(meta)
        slices = [SliceInfo(int(s["sid"]), s["name"]) for s in meta["slices"]]
        entries = read_slice_csv(d / SLICES_FILE)
        loads = read_load_csv(d / LOADS_FILE)
        assignment = {int(k): int(v) for k, v in meta["assignment"].items()}
        return cls.from_entries(meta["name"], topology, slices, entries, loads, assignment,
                                bs=int(meta.get("bs", CONGESTED_BS)),
                                params=meta.get("generator", {}))

    @classmethod
    def from_entries(cls, name, topology, slices, entries, loads, assignment,
                     bs=CONGESTED_BS, params=None) -> "Scenario":
        slices = sorted(slices, key=lambda s: s.sid)
        pos = {s.sid: k for k, s in enumerate(slices)}
        n_t = 1 + max(e.t for e in entries)
        tables = np.full((4, len(slices), n_t), np.nan)
        for e in entries:
            tables[:, pos[e.sid], e.t] = (e.thdl, e.thul, e.ddl, e.dul)
        if np.isnan(tables).any():
            raise ValueError("slice timetable has missing (t, sid) rows")
        load_arrays = {p: (np.array([e.thdl for e in rows]), np.array([e.thul for e in rows]))
                       for p, rows in loads.items()}
        return cls(name, topology, slices, *tables, load_arrays, dict(assignment),
                   bs=bs, params=params or {})


def build_scenario(name: str, seed: int) -> Scenario:
    """One of the named synthetic scenarios on the default 7-station layout."""
    specs, with_satellite = traffic.SCENARIOS.get(name, (None, None))
    if specs is None:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(traffic.SCENARIOS)}")
    topology = build_default_topology(with_satellite=with_satellite)
    slices = [SliceInfo(s.sid, s.name) for s in specs]
    entries = traffic.render_slice_specs(specs, seed)
    loads = traffic.render_load_specs(traffic.LOAD_PROFILES, seed)
    assignment = {b: traffic.assign_profile(b) for b in topology.base_stations if b != CONGESTED_BS}
    params = {"seed": seed, **traffic.specs_to_dict(specs, traffic.LOAD_PROFILES)}
    return Scenario.from_entries(name, topology, slices, entries, loads, assignment, params=params)


_SLICE_COLS = ["t", "bs", "sid", "thdl_mbps", "thul_mbps", "ddl_ms", "dul_ms"]
_LOAD_COLS = ["t", "profile", "thdl_mbps", "thul_mbps"]


def write_slice_csv(path, entries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_SLICE_COLS)
        for e in entries:
            w.writerow([e.t, e.bs, e.sid, repr(e.thdl), repr(e.thul), repr(e.ddl), repr(e.dul)])


def read_slice_csv(path) -> list[SliceProfileEntry]:
    with open(path, newline="") as fh:
        return [SliceProfileEntry(int(r["t"]), int(r["bs"]), int(r["sid"]),
                                  float(r["thdl_mbps"]), float(r["thul_mbps"]),
                                  float(r["ddl_ms"]), float(r["dul_ms"]))
                for r in csv.DictReader(fh)]


def write_load_csv(path, loads: dict[int, list[BsLoadEntry]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_LOAD_COLS)
        for profile, rows in sorted(loads.items()):
            for e in rows:
                w.writerow([e.t, profile, repr(e.thdl), repr(e.thul)])


def read_load_csv(path) -> dict[int, list[BsLoadEntry]]:
    out: dict[int, list[BsLoadEntry]] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            out.setdefault(int(r["profile"]), []).append(
                BsLoadEntry(int(r["t"]), float(r["thdl_mbps"]), float(r["thul_mbps"])))
    for rows in out.values():
        rows.sort(key=lambda e: e.t)
        if [e.t for e in rows] != list(range(len(rows))):
            raise ValueError("load timetable must list every interval exactly once")
    return out
