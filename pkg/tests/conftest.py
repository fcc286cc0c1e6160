import numpy as np
import pytest

from neutralcopy.graph import Graph
from neutralcopy.rng import stream

ACCEPTANCE_LINES: list[str] = []


def assert_graph_invariants(g: Graph) -> None:
    seen = set()
    for u, v in g.edges:
        assert u < v, "edges are stored as (low, high)"
        assert (u, v) not in seen
        seen.add((u, v))
    for u in range(g.n):
        assert u not in g.adjacency[u]
        for v in g.adjacency[u]:
            assert u in g.adjacency[v]
    assert int(np.sum(g.degrees)) == 2 * g.m


def barbell(k: int = 5) -> Graph:
    left = [(i, j) for i in range(k) for j in range(i + 1, k)]
    right = [(i + k, j + k) for i, j in left]
    return Graph(2 * k, left + right + [(k - 1, k)])


def random_connected_graph(rng: np.random.Generator, n_min: int, n_max: int, p: float = 0.4) -> Graph:
    while True:
        n = int(rng.integers(n_min, n_max + 1))
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
        g = Graph(n, edges)
        if g.is_connected():
            return g


@pytest.fixture
def rng():
    return stream(12345)


@pytest.fixture
def two_cliques():
    return barbell(5)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
