import numpy as np
import pytest

from simplexfw.polytopes import DagFlowNetwork, FlowPolytope, Hypercube, L1Ball, Simplex
from simplexfw.problems import layered_dag


def small_polytopes():
    """One small member of each family, enumerable by brute force."""
    return [
        Simplex(5),
        Hypercube(6),
        L1Ball(7),
        FlowPolytope(layered_dag(3, 3, density=0.7, seed=1)),
    ]


def two_path_network():
    return DagFlowNetwork(2, ((0, 1), (0, 1)), 0, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
