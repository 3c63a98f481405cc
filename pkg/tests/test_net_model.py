import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backhaul_select.net_model import (CORE, SATELLITE, BandwidthLedger, CapacityError, Direction,
                                       Link, LinkKind, Path, Topology, build_default_topology,
                                       free_capacity, mdq_waiting_time, path_latency, service_rate,
                                       try_reserve)


@pytest.fixture
def topo():
    return build_default_topology()


def test_default_topology_shape(topo):
    assert len(topo.nodes) == 9
    assert topo.base_stations == list(range(1, 8))
    assert CORE in topo.nodes and SATELLITE in topo.nodes
    # 7 fiber pairs + 6 wireless pairs + 2 satellite legs per direction
    assert len(topo.links) == 14 + 12 + 4


def test_default_link_characteristics(topo):
    for b in range(1, 8):
        for l in (topo.link(b, CORE), topo.link(CORE, b)):
            assert l.kind is LinkKind.WIRED
            assert (l.capacity_mbps, l.base_delay_ms) == (1000.0, 0.1)
    for b in range(2, 8):
        assert topo.link(1, b).base_delay_ms == 1.0
        assert topo.link(b, 1).capacity_mbps == 1000.0
    assert topo.link(1, SATELLITE).base_delay_ms == 100.0
    assert topo.link(SATELLITE, CORE).capacity_mbps == 1000.0


def test_candidate_paths(topo):
    options = topo.candidate_paths(1)
    assert len(options) == 8
    sat = options[0]
    assert [(l.src, l.dst) for l in sat[Direction.UL].links] == [(1, 99), (99, 0)]
    assert [(l.src, l.dst) for l in sat[Direction.DL].links] == [(0, 99), (99, 1)]
    assert [(l.src, l.dst) for l in options[1][Direction.UL].links] == [(1, 0)]
    for a, n in zip(range(2, 8), range(2, 8)):
        assert [(l.src, l.dst) for l in options[a][Direction.UL].links] == [(1, n), (n, 0)]
        assert [(l.src, l.dst) for l in options[a][Direction.DL].links] == [(0, n), (n, 1)]


def test_no_satellite_topology_has_no_satellite_option():
    options = build_default_topology(with_satellite=False).candidate_paths(1)
    assert options[0] == {Direction.UL: None, Direction.DL: None}
    assert all(o[Direction.UL] is not None for o in options[1:])


def test_path_must_be_contiguous():
    a = Link(LinkKind.WIRED, 1, 0, 1000, 0.1)
    b = Link(LinkKind.WIRED, 2, 0, 1000, 0.1)
    with pytest.raises(ValueError):
        Path((a, b))
    with pytest.raises(ValueError):
        Path(())


def test_link_validation():
    with pytest.raises(ValueError):
        Link(LinkKind.WIRED, 1, 0, 0, 0.1)
    with pytest.raises(ValueError):
        Link(LinkKind.WIRED, 1, 0, 10, -1)


def test_topology_round_trip(tmp_path, topo):
    p = tmp_path / "topo.json"
    import json
    p.write_text(json.dumps(topo.to_dict()))
    again = Topology.load(p)
    assert again.links == topo.links
    assert again.nodes == topo.nodes


# -- M/D/1 -----------------------------------------------------------------

def test_mdq_examples():
    assert mdq_waiting_time(0.0, 1.0) == 0.0
    assert mdq_waiting_time(1.0, 1.0) == math.inf
    assert mdq_waiting_time(1.5, 1.0) == math.inf
    # rho / (2 mu (1 - rho)) = 0.5 / (2 * 1 * 0.5)
    assert mdq_waiting_time(0.5, 1.0) == 0.5


@pytest.mark.parametrize("rho, mu", [(-0.1, 1.0), (0.5, -1.0), (0.5, 0.0)])
def test_mdq_rejects_bad_arguments(rho, mu):
    with pytest.raises(ValueError):
        mdq_waiting_time(rho, mu)


@given(st.floats(0.0, 0.999), st.floats(0.0, 0.999), st.floats(0.01, 1e3))
def test_mdq_increasing_in_utilization(r1, r2, mu):
    lo, hi = sorted((r1, r2))
    assert mdq_waiting_time(lo, mu) <= mdq_waiting_time(hi, mu) < math.inf


def test_mdq_diverges_near_saturation():
    values = [mdq_waiting_time(1 - 10.0 ** -k, 1.0) for k in range(1, 12)]
    assert values == sorted(values)
    assert values[-1] > 1e10


# -- latency ---------------------------------------------------------------

def test_unloaded_path_latencies(topo):
    ledger = BandwidthLedger(topo)
    options = topo.candidate_paths(1)
    assert path_latency(options[1][Direction.UL], ledger) == 0.1
    assert path_latency(options[0][Direction.UL], ledger) == 200.0
    assert path_latency(options[0][Direction.DL], ledger) == 200.0
    assert path_latency(options[3][Direction.DL], ledger) == pytest.approx(1.1)
    assert path_latency(None, ledger) == math.inf


def test_wired_path_saturated_is_infinite(topo):
    ledger = BandwidthLedger(topo)
    wired = topo.candidate_paths(1)[1][Direction.DL]
    ledger.try_reserve(wired, Direction.DL, 1000.0)
    assert path_latency(wired, ledger) == math.inf


def test_path_latency_adds_queueing(topo):
    ledger = BandwidthLedger(topo)
    wired = topo.candidate_paths(1)[1][Direction.UL]
    ledger.try_reserve(wired, Direction.UL, 500.0)
    mu = 1000.0 * 1e3 / 12000  # packets per ms
    assert service_rate(wired.links[0]) == mu
    assert path_latency(wired, ledger) == pytest.approx(0.1 + 0.5 / (2 * mu * 0.5), rel=1e-12)


def test_access_load_counts_toward_queueing(topo):
    ledger = BandwidthLedger(topo, {(1, 2): 300.0})
    path = topo.candidate_paths(1)[2][Direction.UL]
    before = path_latency(path, BandwidthLedger(topo))
    assert path_latency(path, ledger) > before


@settings(max_examples=50)
@given(st.lists(st.floats(0, 999), min_size=2, max_size=2))
def test_latency_monotone_in_load(loads):
    topo = build_default_topology()
    path = topo.candidate_paths(1)[4][Direction.DL]
    lo, hi = sorted(loads)
    a = path_latency(path, BandwidthLedger(topo, {(4, 1): lo}))
    b = path_latency(path, BandwidthLedger(topo, {(4, 1): hi}))
    assert a <= b
    if hi > lo + 1e-3:
        assert a < b


# -- reservations ----------------------------------------------------------

def test_free_capacity_examples(topo):
    assert free_capacity(topo.link(1, 0), BandwidthLedger(topo)) == 1000.0
    ledger = BandwidthLedger(topo, {(1, 3): 1000.0})
    assert free_capacity(topo.link(1, 3), ledger) == 0.0
    ledger = BandwidthLedger(topo, {(1, 3): 300.0})
    ledger.try_reserve(Path((topo.link(1, 3),)), Direction.UL, 200.0)
    assert free_capacity(topo.link(1, 3), ledger) == 500.0


def test_zero_demand_reservation(topo):
    ledger = BandwidthLedger(topo)
    rec = try_reserve(topo.candidate_paths(1)[0][Direction.UL], Direction.UL, 0.0, ledger)
    assert all(ledger.free_capacity(l) == l.capacity_mbps for l in topo.links)
    assert rec.demand_mbps == 0.0


def test_reservation_names_limiting_link(topo):
    ledger = BandwidthLedger(topo)
    wired = topo.candidate_paths(1)[1][Direction.UL]
    ledger.try_reserve(wired, Direction.UL, 650.0)
    with pytest.raises(CapacityError) as err:
        ledger.try_reserve(wired, Direction.UL, 400.0)
    assert err.value.link == topo.link(1, 0)
    assert err.value.free_mbps == 350.0


def test_sequential_reservations(topo):
    ledger = BandwidthLedger(topo)
    wired = topo.candidate_paths(1)[1][Direction.DL]
    ledger.try_reserve(wired, Direction.DL, 600.0)
    with pytest.raises(CapacityError):
        ledger.try_reserve(wired, Direction.DL, 600.0)
    assert ledger.reserved[(0, 1)] == 600.0


def test_failed_two_hop_reservation_is_atomic(topo):
    ledger = BandwidthLedger(topo, {(5, 1): 900.0})
    path = topo.candidate_paths(1)[5][Direction.DL]  # 0 -> 5 -> 1
    before = {l.key: ledger.free_capacity(l) for l in topo.links}
    with pytest.raises(CapacityError) as err:
        ledger.try_reserve(path, Direction.DL, 200.0)
    assert err.value.link.key == (5, 1)
    assert {l.key: ledger.free_capacity(l) for l in topo.links} == before


def test_unknown_path_rejected(topo):
    stranger = Path((Link(LinkKind.WIRED, 1, 0, 500.0, 0.1),))
    with pytest.raises(ValueError):
        BandwidthLedger(topo).try_reserve(stranger, Direction.UL, 1.0)
    with pytest.raises(ValueError):
        BandwidthLedger(topo).try_reserve(topo.candidate_paths(1)[1][Direction.UL], Direction.UL, -1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.integers(0, 7), st.booleans(),
                          st.floats(0, 700, allow_nan=False)), max_size=40))
def test_ledger_conservation_and_atomicity(ops):
    topo = build_default_topology()
    options = topo.candidate_paths(1)
    ledger = BandwidthLedger(topo, {(1, 2): 250.0, (3, 1): 400.0})
    outstanding = []
    for release, a, up, demand in ops:
        if release and outstanding:
            ledger.release(outstanding.pop(int(demand) % len(outstanding)))
            continue
        path = options[a][Direction.UL if up else Direction.DL]
        before = {l.key: ledger.free_capacity(l) for l in topo.links}
        try:
            outstanding.append(ledger.try_reserve(path, Direction.UL, demand))
        except CapacityError:
            assert {l.key: ledger.free_capacity(l) for l in topo.links} == before
    for link in topo.links:
        expected = math.fsum(r.demand_mbps for r in outstanding
                             if link in r.path.links)
        assert ledger.reserved.get(link.key, 0.0) == expected
        assert ledger.free_capacity(link) >= 0.0
