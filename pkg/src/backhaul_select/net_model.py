"""Backhaul topology, per-link bandwidth accounting and path latency.

The network is a directed graph: node 0 is the core network, node 99 the
satellite and nodes 1..N are base stations.  Every physical connection is
stored as one directional ``Link`` per traffic direction.  Latency of a path
is the sum of the links' propagation delays plus one M/D/1 waiting time per
traversed egress interface.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from itertools import count
from pathlib import Path as FsPath
from typing import Iterable, Mapping, Sequence

CORE = 0
SATELLITE = 99
CONGESTED_BS = 1

DEFAULT_PACKET_BITS = 12000  # 1500-byte Ethernet MTU
INFINITE_LATENCY = math.inf


class LinkKind(str, Enum):
    WIRED = "wired"
    WIRELESS = "wireless"
    SATELLITE = "satellite"


class Direction(str, Enum):
    DL = "dl"
    UL = "ul"


@dataclass(frozen=True)
class Node:
    id: int
    name: str
    lat: float = 0.0
    lon: float = 0.0


@dataclass(frozen=True)
class Link:
    kind: LinkKind
    src: int
    dst: int
    capacity_mbps: float
    base_delay_ms: float

    def __post_init__(self):
        if not self.capacity_mbps > 0:
            raise ValueError(f"link {self.src}->{self.dst}: capacity must be > 0")
        if self.base_delay_ms < 0:
            raise ValueError(f"link {self.src}->{self.dst}: delay must be >= 0")

    @property
    def key(self) -> tuple[int, int]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class Path:
    """Ordered, contiguous sequence of links (one or two hops)."""

    links: tuple[Link, ...]

    def __post_init__(self):
        if not 1 <= len(self.links) <= 2:
            raise ValueError("only single-hop and two-hop backhaul paths exist")
        for a, b in zip(self.links, self.links[1:]):
            if a.dst != b.src:
                raise ValueError(f"path not contiguous at {a.dst} / {b.src}")

    @property
    def base_delay_ms(self) -> float:
        return sum(link.base_delay_ms for link in self.links)

    def __len__(self):
        return len(self.links)


class Topology:
    def __init__(self, nodes: Iterable[Node], links: Iterable[Link]):
        self.nodes: dict[int, Node] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise ValueError(f"duplicate node id {node.id}")
            self.nodes[node.id] = node
        if CORE not in self.nodes:
            raise ValueError("topology needs a core node (id 0)")
        self.links: list[Link] = []
        self._by_key: dict[tuple[int, int], Link] = {}
        for link in links:
            if link.src not in self.nodes or link.dst not in self.nodes:
                raise ValueError(f"link {link.src}->{link.dst} references unknown node")
            if link.key in self._by_key:
                raise ValueError(f"duplicate link {link.src}->{link.dst}")
            self.links.append(link)
            self._by_key[link.key] = link

    @property
    def base_stations(self) -> list[int]:
        return sorted(n for n in self.nodes if n not in (CORE, SATELLITE))

    @property
    def has_satellite(self) -> bool:
        return SATELLITE in self.nodes

    def link(self, src: int, dst: int) -> Link:
        try:
            return self._by_key[(src, dst)]
        except KeyError:
            raise ValueError(f"no link {src}->{dst}") from None

    def has_link(self, src: int, dst: int) -> bool:
        return (src, dst) in self._by_key

    def route(self, hops: Sequence[int]) -> Path | None:
        """Path through the given node sequence, or None if a hop is missing."""
        if not all(self.has_link(a, b) for a, b in zip(hops, hops[1:])):
            return None
        return Path(tuple(self._by_key[(a, b)] for a, b in zip(hops, hops[1:])))

    def candidate_paths(self, bs: int = CONGESTED_BS) -> list[dict[Direction, Path | None]]:
        """Backhaul options of ``bs`` in action order.

        Index 0 is the satellite, 1 the base station's own wired link, and
        2.. the wireless hop through each other base station followed by
        that station's wired link.  Missing options map to None.
        """
        options = []
        for via in [SATELLITE, None] + [n for n in self.base_stations if n != bs]:
            up = [bs, CORE] if via is None else [bs, via, CORE]
            options.append({Direction.UL: self.route(up), Direction.DL: self.route(up[::-1])})
        return options

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"id": n.id, "name": n.name, "lat": n.lat, "lon": n.lon}
                for n in self.nodes.values()
            ],
            "links": [
                {
                    "kind": l.kind.value,
                    "src": l.src,
                    "dst": l.dst,
                    "capacity_mbps": l.capacity_mbps,
                    "delay_ms": l.base_delay_ms,
                }
                for l in self.links
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Topology":
        nodes = [Node(int(n["id"]), str(n.get("name", n["id"])), float(n.get("lat", 0.0)),
                      float(n.get("lon", 0.0))) for n in data["nodes"]]
        links = [Link(LinkKind(l["kind"]), int(l["src"]), int(l["dst"]),
                      float(l["capacity_mbps"]), float(l["delay_ms"])) for l in data["links"]]
        return cls(nodes, links)

    @classmethod
    def load(cls, path) -> "Topology":
        return cls.from_dict(json.loads(FsPath(path).read_text()))


# Link characteristics of the default scenario (Mbps, ms).
WIRED_CAPACITY, WIRED_DELAY = 1000.0, 0.1
SATELLITE_CAPACITY, SATELLITE_DELAY = 1000.0, 100.0
WIRELESS_CAPACITY, WIRELESS_DELAY = 1000.0, 1.0


def build_default_topology(n_bs: int = 7, with_satellite: bool = True) -> Topology:
    """Core, ``n_bs`` base stations and (optionally) the satellite.

    Every base station has a wired DL/UL fiber pair to the core; BS1 has a
    wireless DL/UL hop to each neighbour and a satellite DL/UL path.
    """
    nodes = [Node(CORE, "core", 42.170, -8.687)]
    # stations spread on a small ring around the core; geography is informational
    for b in range(1, n_bs + 1):
        angle = 2 * math.pi * (b - 1) / n_bs
        nodes.append(Node(b, f"BS{b}", 42.170 + 0.01 * math.cos(angle),
                          -8.687 + 0.01 * math.sin(angle)))
    links = []
    for b in range(1, n_bs + 1):
        links.append(Link(LinkKind.WIRED, b, CORE, WIRED_CAPACITY, WIRED_DELAY))
        links.append(Link(LinkKind.WIRED, CORE, b, WIRED_CAPACITY, WIRED_DELAY))
    for b in range(2, n_bs + 1):
        links.append(Link(LinkKind.WIRELESS, CONGESTED_BS, b, WIRELESS_CAPACITY, WIRELESS_DELAY))
        links.append(Link(LinkKind.WIRELESS, b, CONGESTED_BS, WIRELESS_CAPACITY, WIRELESS_DELAY))
    if with_satellite:
        nodes.append(Node(SATELLITE, "satellite", 0.0, -8.687))
        for a, b in ((CONGESTED_BS, SATELLITE), (SATELLITE, CORE),
                     (CORE, SATELLITE), (SATELLITE, CONGESTED_BS)):
            links.append(Link(LinkKind.SATELLITE, a, b, SATELLITE_CAPACITY, SATELLITE_DELAY))
    return Topology(nodes, links)


def mdq_waiting_time(utilization: float, service_rate: float) -> float:
    """Mean M/D/1 queueing delay ``rho / (2 mu (1 - rho))``.

    ``service_rate`` is in packets per ms, so the result is in ms.  A
    saturated interface (rho >= 1) never drains and yields infinity.
    """
    if utilization < 0 or service_rate < 0:
        raise ValueError("utilization and service_rate must be non-negative")
    if service_rate == 0:
        raise ValueError("service_rate must be > 0")
    if utilization >= 1:
        return INFINITE_LATENCY
    return utilization / (2.0 * service_rate * (1.0 - utilization))


class CapacityError(Exception):
    """Raised when a reservation does not fit on some link of the path."""

    def __init__(self, link: Link, free_mbps: float, demand_mbps: float):
        super().__init__(f"{link.kind.value} link {link.src}->{link.dst}: "
                         f"{demand_mbps:g} Mbps requested, {free_mbps:g} Mbps free")
        self.link = link
        self.free_mbps = free_mbps
        self.demand_mbps = demand_mbps


@dataclass(frozen=True)
class Reservation:
    id: int
    path: Path
    direction: Direction
    demand_mbps: float


class BandwidthLedger:
    """Access load and backhaul reservations of every link.

    Reserved totals are always recomputed from the outstanding records
    with ``math.fsum`` so they depend only on the set of records, never on
    the order of reserve/release calls.  That makes a release restore the
    previous free capacity bit-for-bit.
    """

    def __init__(self, topology: Topology, access_load: Mapping[tuple[int, int], float] | None = None):
        self.topology = topology
        self.access: dict[tuple[int, int], float] = {}
        self.reserved: dict[tuple[int, int], float] = {}
        self._on_link: dict[tuple[int, int], dict[int, float]] = {}
        self.records: dict[int, Reservation] = {}
        self._ids = count()
        for key, load in (access_load or {}).items():
            self.set_access_load(*key, load)

    def set_access_load(self, src: int, dst: int, mbps: float):
        if mbps < 0:
            raise ValueError("access load must be non-negative")
        self.topology.link(src, dst)
        self.access[(src, dst)] = float(mbps)

    def copy(self) -> "BandwidthLedger":
        new = BandwidthLedger.__new__(BandwidthLedger)
        new.topology = self.topology
        new.access = dict(self.access)
        new.reserved = dict(self.reserved)
        new._on_link = {k: dict(v) for k, v in self._on_link.items()}
        new.records = dict(self.records)
        new._ids = count(max(self.records, default=-1) + 1)
        return new

    def load(self, link: Link) -> float:
        key = link.key
        return self.access.get(key, 0.0) + self.reserved.get(key, 0.0)

    def free_capacity(self, link: Link) -> float:
        return max(0.0, link.capacity_mbps - self.load(link))

    def path_free_capacity(self, path: Path | None) -> float:
        if path is None:
            return 0.0
        return min(self.free_capacity(link) for link in path.links)

    def _check_path(self, path: Path):
        for link in path.links:
            if self.topology._by_key.get(link.key) != link:
                raise ValueError(f"link {link.src}->{link.dst} is not part of this topology")

    def try_reserve(self, path: Path, direction: Direction, demand_mbps: float) -> Reservation:
        """Reserve ``demand_mbps`` on every link of ``path`` or on none.

        Raises CapacityError naming the first link without enough room.
        """
        if demand_mbps < 0:
            raise ValueError("demand must be non-negative")
        self._check_path(path)
        for link in path.links:
            free = self.free_capacity(link)
            if free < demand_mbps:
                raise CapacityError(link, free, demand_mbps)
        rid = next(self._ids)
        rec = Reservation(rid, path, Direction(direction), float(demand_mbps))
        self.records[rid] = rec
        for link in path.links:
            entries = self._on_link.setdefault(link.key, {})
            entries[rid] = rec.demand_mbps
            self.reserved[link.key] = math.fsum(entries.values())
        return rec

    def release(self, reservation: Reservation | int):
        rid = reservation if isinstance(reservation, int) else reservation.id
        rec = self.records.pop(rid)
        for link in rec.path.links:
            entries = self._on_link[link.key]
            del entries[rid]
            if entries:
                self.reserved[link.key] = math.fsum(entries.values())
            else:
                del self._on_link[link.key]
                del self.reserved[link.key]


def try_reserve(path: Path, direction: Direction, demand_mbps: float,
                ledger: BandwidthLedger) -> Reservation:
    return ledger.try_reserve(path, direction, demand_mbps)


def free_capacity(link: Link, ledger: BandwidthLedger) -> float:
    return ledger.free_capacity(link)


def service_rate(link: Link, packet_size_bits: float = DEFAULT_PACKET_BITS) -> float:
    """Packets per ms the link's interface can transmit."""
    return link.capacity_mbps * 1e3 / packet_size_bits


def path_latency(path: Path | None, ledger: BandwidthLedger,
                 packet_size_bits: float = DEFAULT_PACKET_BITS) -> float:
    """End-to-end latency in ms: propagation plus M/D/1 wait per interface."""
    if path is None:
        return INFINITE_LATENCY
    total = 0.0
    for link in path.links:
        rho = ledger.load(link) / link.capacity_mbps
        total += link.base_delay_ms + mdq_waiting_time(rho, service_rate(link, packet_size_bits))
    return total
