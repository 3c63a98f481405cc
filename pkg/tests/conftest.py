import numpy as np

from backhaul_select.net_model import build_default_topology
from backhaul_select.scenario import Scenario, SliceInfo
from backhaul_select.traffic import assign_profile

ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)


def random_scenario(rng: np.random.Generator, n_slices: int) -> Scenario:
    """One-interval scenario with random demands, bounds and neighbour loads."""
    topology = build_default_topology(with_satellite=bool(rng.random() < 0.8))
    slices = [SliceInfo(k + 1, f"s{k + 1}") for k in range(n_slices)]
    bounds = rng.choice([0.5, 1.0, 2.0, 100.0, 150.0, 300.0, 10000.0], size=(n_slices, 2))
    demand = rng.uniform(0.0, 700.0, size=(2, n_slices, 1))
    loads = {p: (rng.uniform(0, 1000, 1), rng.uniform(0, 1000, 1)) for p in (1, 2, 3)}
    assignment = {b: assign_profile(b) for b in range(2, 8)}
    return Scenario("random", topology, slices, demand[0], demand[1], bounds[:, :1].copy(),
                    bounds[:, 1:].copy(), loads, assignment)
