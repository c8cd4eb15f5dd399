"""
Tests for temporal neighbor sampling and negative sampling.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neighbor_sampling import (
    DIRECTED,
    NeighborSampler,
    SamplingError,
    merge_two_hop,
    negative_pool,
    recent_neighbors,
    recent_two_hop,
    sample_layers,
    sample_negative,
    sample_negatives,
    uniform_neighbors,
)
from temporal_graph import chronological_split, from_arrays


def oracle_recent(g, v, t, k, directed=False):
    """Filter-and-sort over the raw interaction list."""
    found = []
    for i in range(g.num_edges):
        if g.ts[i] >= t:
            continue
        if g.src[i] == v:
            found.append((int(g.dst[i]), float(g.ts[i]), i))
        if not directed and g.dst[i] == v:
            found.append((int(g.src[i]), float(g.ts[i]), i))
    found.sort(key=lambda e: (e[1], e[2]), reverse=True)
    return found[:k]


def assert_descending(nb):
    keys = list(zip(nb.ts, nb.eidx))
    assert keys == sorted(keys, reverse=True)


class TestRecentNeighbors:
    """Test the K most recent strictly-earlier interactions."""

    def test_node4_recent_three(self, six_edge_graph):
        """v4 before t7: (v5,t6), (v2,t4), (v2,t3)."""
        nb = recent_neighbors(six_edge_graph, 4, 7.0, 10)
        assert nb.pairs() == [(5, 6.0), (2, 4.0), (2, 3.0)]

    def test_strictly_before(self, six_edge_graph):
        """An interaction at exactly the query time is excluded."""
        nb = recent_neighbors(six_edge_graph, 4, 6.0, 10)
        assert nb.pairs() == [(2, 4.0), (2, 3.0)]

    def test_truncated_to_k(self, six_edge_graph):
        nb = recent_neighbors(six_edge_graph, 4, 7.0, 2)
        assert nb.pairs() == [(5, 6.0), (2, 4.0)]

    def test_two_node_directionality(self):
        """Two interactions i→j: j has no directed history but two bi-directed entries."""
        g = from_arrays([0, 0], [1, 1], [1.0, 2.0])
        assert len(recent_neighbors(g, 1, 3.0, 5, "di")) == 0
        assert recent_neighbors(g, 1, 3.0, 5, "bi").pairs() == [(0, 2.0), (0, 1.0)]

    def test_single_interaction(self):
        g = from_arrays([0], [1], [1.0])
        assert recent_neighbors(g, 0, 2.0, 1).pairs() == [(1, 1.0)]

    def test_before_first_event_is_empty(self, six_edge_graph):
        nb = recent_neighbors(six_edge_graph, 1, 1.0, 3)
        assert len(nb) == 0
        assert nb.query_time == 1.0

    def test_unknown_node(self, six_edge_graph):
        with pytest.raises(SamplingError):
            recent_neighbors(six_edge_graph, 99, 1.0, 3)

    def test_k_must_be_positive(self, six_edge_graph):
        with pytest.raises(SamplingError):
            recent_neighbors(six_edge_graph, 1, 1.0, 0)

    def test_unknown_direction(self, six_edge_graph):
        with pytest.raises(SamplingError):
            recent_neighbors(six_edge_graph, 1, 1.0, 1, "sideways")

    @pytest.mark.parametrize("directed", [False, True])
    def test_matches_full_scan_oracle(self, graph_factory, directed):
        """Random (v, t, K) queries agree with the filter-and-sort oracle exactly."""
        g = graph_factory(7, num_nodes=15, num_edges=300)
        rng = np.random.default_rng(1)
        for _ in range(200):
            v = int(rng.integers(g.num_nodes))
            t = float(rng.uniform(0, g.ts.max() + 2))
            k = int(rng.integers(1, 12))
            nb = recent_neighbors(g, v, t, k, "di" if directed else "bi")
            assert nb.entries == oracle_recent(g, v, t, k, directed)

    def test_directed_subset_of_bidirected(self, random_graph):
        g = random_graph
        for v in range(g.num_nodes):
            t = float(g.ts.max() + 1)
            di = set(recent_neighbors(g, v, t, g.num_edges, "di").entries)
            bi = set(recent_neighbors(g, v, t, 2 * g.num_edges, "bi").entries)
            assert di <= bi


class TestUniformNeighbors:
    """Test uniform sampling without replacement."""

    def test_short_history_equals_recent(self, six_edge_graph):
        rng = np.random.default_rng(0)
        uni = uniform_neighbors(six_edge_graph, 4, 7.0, 5, rng)
        assert uni.entries == recent_neighbors(six_edge_graph, 4, 7.0, 5).entries

    def test_reproducible_under_seed(self):
        g = from_arrays(np.zeros(1000, dtype=int), np.ones(1000, dtype=int), np.arange(1000))
        a = uniform_neighbors(g, 0, 2000.0, 10, np.random.default_rng(5))
        b = uniform_neighbors(g, 0, 2000.0, 10, np.random.default_rng(5))
        assert a.entries == b.entries

    def test_different_seeds_sorted_and_distinct(self):
        g = from_arrays(np.zeros(1000, dtype=int), np.ones(1000, dtype=int), np.arange(1000))
        sets = []
        for seed in range(100):
            nb = uniform_neighbors(g, 0, 2000.0, 10, np.random.default_rng(seed))
            assert len(nb) == 10
            assert len(set(nb.eidx)) == 10
            assert_descending(nb)
            sets.append(frozenset(nb.eidx.tolist()))
        assert len(set(sets)) >= 99

    @pytest.mark.slow
    def test_inclusion_frequency(self):
        """Each event is included with probability K/n."""
        n, k, trials = 200, 10, 4000
        g = from_arrays(np.zeros(n, dtype=int), np.ones(n, dtype=int), np.arange(n))
        counts = np.zeros(n)
        for seed in range(trials):
            nb = uniform_neighbors(g, 0, float(n), k, np.random.default_rng(seed))
            counts[nb.eidx] += 1
        p = k / n
        sigma = np.sqrt(trials * p * (1 - p))
        assert np.all(np.abs(counts - trials * p) <= 4.5 * sigma)


class TestTwoHop:
    """Test layered temporal neighborhoods."""

    def test_node4_two_hop(self, six_edge_graph):
        tree = recent_two_hop(six_edge_graph, 4, 7.0, 2, 2)
        hop1 = tree.hops[0][0]
        assert hop1.pairs() == [(5, 6.0), (2, 4.0)]
        # v5 before t6: only (v3, t5); v2 before t4: (v4, t3), (v1, t1)
        assert tree.hops[1][0].pairs() == [(3, 5.0)]
        assert tree.hops[1][1].pairs() == [(4, 3.0), (1, 1.0)]

    def test_empty_history(self, six_edge_graph):
        tree = recent_two_hop(six_edge_graph, 0, 7.0, 3, 3)
        assert len(tree.hops[0][0]) == 0
        assert tree.hops[1] == ()

    def test_earliest_branch_is_empty(self):
        """A hop-1 entry at the globally earliest time has nothing before it."""
        g = from_arrays([0, 2, 1], [1, 3, 2], [1.0, 1.5, 2.0])
        tree = recent_two_hop(g, 1, 3.0, 2, 1)
        assert tree.hops[0][0].pairs() == [(2, 2.0), (0, 1.0)]
        assert tree.hops[1][0].pairs() == [(3, 1.5)]
        assert len(tree.hops[1][1]) == 0

    def test_paths_have_decreasing_time(self, random_graph):
        g = random_graph
        for v in range(g.num_nodes):
            tree = sample_layers(g, v, float(g.ts.max() + 1), (3, 3, 2))
            for depth in range(1, tree.depth):
                parents = [e for nb in tree.hops[depth - 1] for e in nb.entries]
                assert len(parents) == len(tree.hops[depth])
                for (_, t_parent, _), child in zip(parents, tree.hops[depth]):
                    assert child.query_time == t_parent
                    assert np.all(child.ts < t_parent)

    def test_invalid_fanout(self, six_edge_graph):
        with pytest.raises(SamplingError):
            recent_two_hop(six_edge_graph, 4, 7.0, 0, 2)

    def test_uniform_layers_need_generator(self, six_edge_graph):
        with pytest.raises(SamplingError):
            sample_layers(six_edge_graph, 4, 7.0, (2,), mode="uniform")


class TestNeighborSampler:
    """Test the vectorised batch sampler against the single-query functions."""

    @pytest.mark.parametrize("direction", ["bi", "di"])
    def test_batch_matches_single_queries(self, random_graph, direction):
        g = random_graph
        sampler = NeighborSampler(g, "recent", direction)
        rng = np.random.default_rng(2)
        nodes = rng.integers(g.num_nodes, size=40)
        times = rng.uniform(0, g.ts.max() + 2, size=40)
        batch = sampler.sample(nodes, times, 6)
        for row, (v, t) in enumerate(zip(nodes, times)):
            nb = recent_neighbors(g, int(v), float(t), 6, direction)
            n = len(nb)
            assert batch.mask[row].sum() == n
            assert list(batch.eidx[row, :n]) == list(nb.eidx)
            assert np.all(batch.eidx[row, n:] == -1)
            assert np.all(batch.ts[row, n:] == t)

    def test_uniform_rows_are_sorted(self, random_graph):
        sampler = NeighborSampler(random_graph, "uniform", "bi", np.random.default_rng(0))
        t = float(random_graph.ts.max() + 1)
        batch = sampler.sample(np.arange(random_graph.num_nodes), np.full(random_graph.num_nodes, t), 4)
        for row in range(batch.nbr.shape[0]):
            n = int(batch.mask[row].sum())
            keys = list(zip(batch.ts[row, :n], batch.eidx[row, :n]))
            assert keys == sorted(keys, reverse=True)

    def test_sample_tree_children_follow_parents(self, six_edge_graph):
        sampler = NeighborSampler(six_edge_graph)
        hop1, hop2 = sampler.sample_tree(np.array([4]), np.array([7.0]), (2, 2))
        assert hop1.nbr[0].tolist() == [5, 2]
        assert hop2.nbr.shape == (2, 2)
        assert hop2.mask[0].tolist() == [True, False]
        assert hop2.nbr[1].tolist() == [4, 1]

    def test_merge_two_hop_is_newest_first(self, six_edge_graph):
        sampler = NeighborSampler(six_edge_graph)
        hop1, hop2 = sampler.sample_tree(np.array([4]), np.array([7.0]), (2, 2))
        merged = merge_two_hop(hop1, hop2)
        n = int(merged.mask[0].sum())
        assert merged.nbr.shape == (1, 6)
        assert list(zip(merged.nbr[0, :n], merged.ts[0, :n])) == [
            (5, 6.0),
            (3, 5.0),
            (2, 4.0),
            (4, 3.0),
            (1, 1.0),
        ]

    def test_unknown_node_in_batch(self, six_edge_graph):
        with pytest.raises(SamplingError):
            NeighborSampler(six_edge_graph).sample(np.array([99]), np.array([1.0]), 2)

    def test_directed_sampler_mode(self, six_edge_graph):
        assert NeighborSampler(six_edge_graph, directionality="di").directionality == DIRECTED


class TestNegativeSampling:
    """Test uniform negative destinations."""

    def test_two_nodes_always_the_other(self):
        g = from_arrays([0, 1], [1, 0], [1.0, 2.0])
        rng = np.random.default_rng(0)
        for _ in range(50):
            assert sample_negative(rng, g, 0, 1) == 0
            assert sample_negative(rng, g, 1, 0) == 1

    def test_single_destination_has_no_negative(self):
        # pool is destination nodes only: {1}
        g = from_arrays([0], [1], [1.0])
        with pytest.raises(SamplingError):
            sample_negative(np.random.default_rng(0), g, 0, 1)

    def test_uniform_over_eligible_nodes(self):
        pool = np.arange(5)
        draws = sample_negatives(np.random.default_rng(0), pool, np.full(100_000, 2))
        assert not np.any(draws == 2)
        counts = np.bincount(draws, minlength=5)[[0, 1, 3, 4]]
        expected = 100_000 / 4
        sigma = np.sqrt(100_000 * 0.25 * 0.75)
        assert np.all(np.abs(counts - expected) <= 4 * sigma)

    def test_exclude_outside_pool(self):
        draws = sample_negatives(np.random.default_rng(0), np.array([3, 7]), np.full(1000, 5))
        assert set(draws.tolist()) == {3, 7}

    def test_inductive_pool(self):
        g = from_arrays(np.arange(20), np.arange(1, 21), np.arange(20))
        split = chronological_split(g)
        pool = negative_pool(g, split.inductive_nodes)
        rng = np.random.default_rng(1)
        for dst in g.dst[split.val_end_idx :]:
            neg = sample_negative(rng, g, 0, int(dst), pool)
            assert neg in split.inductive_nodes

    def test_pool_is_destination_nodes(self, six_edge_graph):
        assert negative_pool(six_edge_graph).tolist() == [2, 3, 4, 5]

    def test_no_eligible_node(self):
        with pytest.raises(SamplingError):
            sample_negatives(np.random.default_rng(0), np.array([4]), np.array([4]))
        with pytest.raises(SamplingError):
            sample_negatives(np.random.default_rng(0), np.array([], dtype=int), np.array([1]))

    def test_single_node_graph(self):
        g = from_arrays([0], [0], [1.0])
        with pytest.raises(SamplingError):
            sample_negative(np.random.default_rng(0), g, 0, 0)

    @settings(max_examples=50, deadline=None)
    @given(
        pool=st.lists(st.integers(0, 50), min_size=2, max_size=20, unique=True),
        exclude=st.lists(st.integers(0, 50), min_size=1, max_size=30),
        seed=st.integers(0, 2**16),
    )
    def test_draws_stay_in_pool_and_avoid_exclude(self, pool, exclude, seed):
        pool = np.array(sorted(pool))
        exclude = np.array(exclude)
        draws = sample_negatives(np.random.default_rng(seed), pool, exclude)
        assert draws.shape == exclude.shape
        assert np.all(np.isin(draws, pool))
        assert np.all(draws != exclude)
