import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from backhaul_select.traffic import (MAX_LOAD_MBPS, Bump, Curve, assign_profile, clock,
                                     generate_bs_load_profiles, generate_slice_profiles,
                                     interval_of, split_dataset, window)

SAT = "with_satellite_4slices"


def _totals(entries, attr):
    out = np.zeros(96)
    for e in entries:
        out[e.t] += getattr(e, attr)
    return out


@pytest.mark.parametrize("b, p", [(2, 2), (3, 3), (4, 1), (5, 2), (6, 3), (7, 1)])
def test_assign_profile(b, p):
    assert assign_profile(b) == p


@pytest.mark.parametrize("b", [0, 1, 8, -3])
def test_assign_profile_out_of_range(b):
    with pytest.raises(ValueError):
        assign_profile(b)


def test_clock_helpers():
    assert interval_of("00:00") == 0
    assert interval_of("09:00") == 36
    assert clock(55) == "13:45"
    assert window("23:30", "00:30") == [94, 95, 0, 1]
    with pytest.raises(ValueError):
        interval_of("10:07")


def test_bump_wraps_midnight():
    b = Bump(94, 4, 10.0).render()
    assert list(np.flatnonzero(b)) == [0, 1, 94, 95]


def test_curve_clipped_and_rounded():
    v = Curve(900.0, [Bump(0, 96, 500.0)], 0.1).render(np.random.default_rng(0))
    assert v.max() <= MAX_LOAD_MBPS and v.min() >= 0
    assert np.allclose(v * 10, np.round(v * 10))


@pytest.mark.parametrize("name, n", [(SAT, 4), ("no_satellite_3slices", 3)])
def test_slice_timetable_shape(name, n):
    entries = generate_slice_profiles(name, 0)
    assert len(entries) == 96 * n
    for sid in {e.sid for e in entries}:
        assert sorted(e.t for e in entries if e.sid == sid) == list(range(96))
    assert all(e.thdl >= 0 and e.thul >= 0 and e.ddl > 0 and e.dul > 0 for e in entries)


def test_latency_bounds_per_slice():
    bounds = {e.sid: (e.ddl, e.dul) for e in generate_slice_profiles(SAT, 0)}
    assert bounds == {1: (100.0, 100.0), 2: (10000.0, 10000.0), 3: (1.0, 1.0),
                      4: (300.0, 300.0)}


@pytest.mark.parametrize("seed", [0, 1, 2, 7])
def test_saturation_windows(seed):
    entries = generate_slice_profiles(SAT, seed)
    ul, dl = _totals(entries, "thul"), _totals(entries, "thdl")
    assert ul[interval_of("09:00")] > 1000.0
    assert ul[interval_of("03:00")] <= 1000.0
    assert all(ul[t] > 1000.0 for t in window("04:30", "14:30"))
    assert all(dl[t] > 1000.0 for t in window("13:45", "01:00"))
    quiet = set(range(96)) - set(window("04:30", "14:30")) - set(window("13:45", "01:00"))
    assert quiet and all(ul[t] <= 1000.0 and dl[t] <= 1000.0 for t in quiet)


def test_urllc_constant():
    urllc = [e for e in generate_slice_profiles(SAT, 3) if e.sid == 3]
    assert len({e.thdl for e in urllc}) == 1
    assert len({e.thul for e in urllc}) == 1


def test_embb_peaks_in_daytime():
    embb = {e.t: e.thul for e in generate_slice_profiles(SAT, 0) if e.sid == 1}
    assert embb[interval_of("10:00")] > embb[interval_of("03:00")]


@pytest.mark.parametrize("seed", [0, 5])
def test_load_profiles(seed):
    loads = generate_bs_load_profiles(seed)
    assert sorted(loads) == [1, 2, 3]
    for rows in loads.values():
        assert [r.t for r in rows] == list(range(96))
        assert all(0 <= r.thdl <= 1000 and 0 <= r.thul <= 1000 for r in rows)
    # light all day
    assert all(max(r.thdl, r.thul) <= 500.0 for r in loads[2])
    # heavy at noon, light at night
    noon = loads[3][interval_of("12:00")]
    assert min(noon.thdl, noon.thul) >= 850.0
    assert loads[3][interval_of("03:00")].thdl < 400.0
    # heavy only briefly
    p1 = np.array([r.thdl for r in loads[1]])
    assert 0 < (p1 > 800).sum() <= 12


def test_generation_is_deterministic():
    assert generate_slice_profiles(SAT, 4) == generate_slice_profiles(SAT, 4)
    assert generate_bs_load_profiles(4) == generate_bs_load_profiles(4)
    assert generate_slice_profiles(SAT, 4) != generate_slice_profiles(SAT, 5)


@given(st.integers(0, 2**32 - 1))
def test_split_partition(seed):
    s = split_dataset(seed)
    assert (len(s.train), len(s.validation), len(s.test)) == (67, 9, 20)
    assert sorted(s.train + s.validation + s.test) == list(range(96))
    assert list(s.train) == sorted(s.train)
    assert split_dataset(seed) == s


def test_split_rejects_wrong_day_length():
    with pytest.raises(ValueError):
        split_dataset(0, 95)
    with pytest.raises(ValueError):
        split_dataset(0).part("holdout")
