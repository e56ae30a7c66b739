import networkx as nx
import numpy as np
import pytest
from hypothesis import strategies as st

from nbimmune.graph import Graph


def from_nx(h):
    h = nx.convert_node_labels_to_integers(h)
    return Graph.from_edges(h.number_of_nodes(), list(h.edges()))


def gnp(n, p, seed):
    return from_nx(nx.gnp_random_graph(n, p, seed=seed))


def triangle_with_pendant():
    # nodes 0,1,2 form the triangle; 3 hangs off 0
    return Graph.from_edges(4, [(0, 1), (1, 2), (0, 2), (0, 3)])


@st.composite
def small_graphs(draw, min_n=1, max_n=10):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph.from_edges(n, [e for e, keep in zip(pairs, mask) if keep])


@pytest.fixture
def k4():
    return from_nx(nx.complete_graph(4))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
