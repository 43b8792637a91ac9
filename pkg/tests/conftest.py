"""Shared graph builders for the test suite."""

import numpy as np
import pytest

from prunesolve.graph import Graph


def graph_from_edges(n, edges):
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return Graph(n, arr)


@pytest.fixture
def triangle():
    return graph_from_edges(3, [(0, 1), (1, 2), (2, 0)])


@pytest.fixture
def path3():
    return graph_from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def star5():
    # K1,4 with node 0 as the center
    return graph_from_edges(5, [(0, i) for i in range(1, 5)])


@pytest.fixture
def cycle5():
    return graph_from_edges(5, [(i, (i + 1) % 5) for i in range(5)])


@pytest.fixture
def edgeless6():
    return Graph(6, np.empty((0, 2), dtype=np.int64))


def random_graph(n, p, seed):
    """Erdos-Renyi graph for oracle sweeps."""
    rng = np.random.default_rng(seed)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    keep = rng.random(len(pairs)) < p
    edges = [e for e, k in zip(pairs, keep) if k]
    if not edges:
        return Graph(n, np.empty((0, 2), dtype=np.int64))
    return graph_from_edges(n, edges)
