import numpy as np
import pytest

from cheapbandits.generators import disjoint_cliques
from cheapbandits.graph import from_edge_list, spectral_decomposition


@pytest.fixture
def two_node():
    return from_edge_list(2, [(0, 1, 1.0)])


@pytest.fixture
def k5():
    return from_edge_list(5, [(i, j, 1.0) for i in range(5) for j in range(i + 1, 5)])


@pytest.fixture(scope="session")
def four_cliques():
    g = disjoint_cliques(4, 100)
    return g, spectral_decomposition(g)


def random_weighted_graph(rng: np.random.Generator, n: int, p: float):
    edges = [(i, j, float(1.0 - rng.random())) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return from_edge_list(n, edges)


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
