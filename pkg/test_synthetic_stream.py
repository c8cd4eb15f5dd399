"""
Tests for the planted-recency stream generator.
"""

import numpy as np
import pytest

from synthetic_stream import generate_planted_stream
from temporal_graph import GraphValidationError


class TestPlantedStream:
    """Test shapes, ordering and the planted repeat pattern."""

    def test_same_seed_same_stream(self):
        a = generate_planted_stream(20, 100, seed=3)
        b = generate_planted_stream(20, 100, seed=3)
        assert a.equals(b)

    def test_different_seed(self):
        a = generate_planted_stream(20, 100, seed=3)
        b = generate_planted_stream(20, 100, seed=4)
        assert not np.array_equal(a.dst, b.dst)

    def test_shapes(self):
        g = generate_planted_stream(15, 80, d_e=4, d_n=8)
        assert g.num_edges == 80
        assert g.num_nodes == 15
        assert g.edge_feats.shape == (80, 4)
        assert g.node_feats.shape == (15, 8)

    def test_unit_norm_features(self):
        g = generate_planted_stream(10, 50)
        np.testing.assert_allclose(np.linalg.norm(g.edge_feats, axis=1), 1.0)
        np.testing.assert_allclose(np.linalg.norm(g.node_feats, axis=1), 1.0)

    def test_featureless(self):
        g = generate_planted_stream(10, 50, d_e=0, d_n=0)
        assert g.edge_feats.shape == (50, 0)
        assert g.node_feats.shape == (10, 0)

    def test_strictly_increasing_time(self):
        g = generate_planted_stream(10, 200, mean_gap=0.5)
        assert np.all(np.diff(g.ts) > 0)
        assert not g.resorted

    def test_no_self_loops(self):
        g = generate_planted_stream(5, 300, repeat_prob=0.0)
        assert np.all(g.src != g.dst)

    def test_full_repeat_follows_last_partner(self):
        g = generate_planted_stream(8, 200, repeat_prob=1.0, window=1)
        last = {}
        checked = 0
        for s, d in zip(g.src.tolist(), g.dst.tolist()):
            if s in last:
                assert d == last[s]
                checked += 1
            last[s] = d
            last[d] = s
        assert checked > 0

    def test_repeats_raise_pair_reuse(self):
        sticky = generate_planted_stream(30, 400, repeat_prob=0.9, seed=1)
        fresh = generate_planted_stream(30, 400, repeat_prob=0.0, seed=1)

        def distinct_pairs(g):
            return len(set(zip(g.src.tolist(), g.dst.tolist())))

        assert distinct_pairs(sticky) < distinct_pairs(fresh)

    def test_empty_stream(self):
        g = generate_planted_stream(4, 0)
        assert g.num_edges == 0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"num_nodes": 1, "num_edges": 10},
            {"num_nodes": 5, "num_edges": -1},
            {"num_nodes": 5, "num_edges": 10, "repeat_prob": 1.5},
            {"num_nodes": 5, "num_edges": 10, "window": 0},
            {"num_nodes": 5, "num_edges": 10, "mean_gap": 0.0},
        ],
    )
    def test_invalid_parameters(self, kwargs):
        with pytest.raises(GraphValidationError):
            generate_planted_stream(**kwargs)
