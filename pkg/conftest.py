"""
Shared fixtures for the stgl test suite.
"""

import numpy as np
import pytest

from synthetic_stream import generate_planted_stream
from temporal_graph import chronological_split, from_arrays


def make_random_graph(
    seed: int,
    num_nodes: int = 20,
    num_edges: int = 200,
    d_e: int = 3,
    d_n: int = 2,
    distinct_times: bool = False,
):
    """Random stream with unit-bounded features; timestamps may tie."""
    rng = np.random.default_rng(seed)
    src = rng.integers(num_nodes, size=num_edges)
    dst = rng.integers(num_nodes, size=num_edges)
    if distinct_times:
        ts = np.arange(1, num_edges + 1, dtype=np.float64)
    else:
        ts = np.sort(rng.integers(1, num_edges // 2 + 2, size=num_edges)).astype(np.float64)
    edge_feats = rng.uniform(-0.5, 0.5, size=(num_edges, d_e))
    node_feats = rng.uniform(-0.5, 0.5, size=(num_nodes, d_n))
    return from_arrays(src, dst, ts, edge_feats, node_feats)


@pytest.fixture
def six_edge_graph():
    """(1,2)@1, (1,3)@2, (2,4)@3, (4,2)@4, (3,5)@5, (5,4)@6; node 0 never interacts."""
    return from_arrays(
        src=[1, 1, 2, 4, 3, 5],
        dst=[2, 3, 4, 2, 5, 4],
        ts=[1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
    )


@pytest.fixture
def featured_six_edge_graph():
    """The six-interaction graph with small edge and node features."""
    rng = np.random.default_rng(3)
    return from_arrays(
        src=[1, 1, 2, 4, 3, 5],
        dst=[2, 3, 4, 2, 5, 4],
        ts=[1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        edge_feats=rng.uniform(-0.5, 0.5, size=(6, 2)),
        node_feats=rng.uniform(-0.5, 0.5, size=(6, 3)),
    )


@pytest.fixture
def random_graph():
    return make_random_graph(0)


@pytest.fixture
def graph_factory():
    """make_random_graph, for tests that need several instances."""
    return make_random_graph


@pytest.fixture
def planted_graph():
    return generate_planted_stream(num_nodes=30, num_edges=300, repeat_prob=0.8, seed=0)


@pytest.fixture
def planted_split(planted_graph):
    return chronological_split(planted_graph)
