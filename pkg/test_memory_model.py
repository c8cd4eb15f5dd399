"""
Tests for the memory-based model and its StopGrad gradient.
"""

import numpy as np
import pytest

from grad_check import finite_difference_grad, model_grad, numeric_grad, objective, relative_error
from memory_model import MEMORY_KAPPA, MemoryState, memory_param_specs, memory_step
from nn_layers import param_init
from tgl_models import ModelConfig, QueryBatch, build_model
from time_features import ModelError, TimeEncoder


def fresh_state(g, hidden=4, seed=0):
    params = param_init(memory_param_specs(hidden, g.d_n, g.d_e), np.random.default_rng(seed), hidden)
    return params, MemoryState.initial(params, g.node_feats, g.d_e)


@pytest.fixture
def memory_model(random_graph):
    cfg = ModelConfig(method="memory", hidden=4, time_dim=3, mlp_hidden=3)
    model = build_model(cfg, random_graph)
    rng = np.random.default_rng(5)
    params = model.init_params(rng, m=4)
    model.params = params.with_vector(rng.normal(0.0, 0.8, size=params.count))
    return model


class TestMemoryStep:
    """Test single memory updates."""

    def test_first_interaction_reads_initial_memory(self, random_graph):
        g = random_graph
        params, state = fresh_state(g)
        W0 = params["memory.W0"]
        memory_step(params, state, 0, 1, 1.0, g.edge_feats[0])
        np.testing.assert_allclose(state.msg_self[0], W0 @ g.node_feats[0])
        np.testing.assert_allclose(state.msg_other[0], W0 @ g.node_feats[1])
        expected = np.tanh(
            MEMORY_KAPPA
            * (
                params["memory.W1"] @ W0 @ g.node_feats[0]
                + params["memory.W2"] @ W0 @ g.node_feats[1]
                + params["memory.W3"] @ g.edge_feats[0]
            )
        )
        np.testing.assert_allclose(state.s[0], expected)

    def test_zero_inputs_stay_at_zero(self, random_graph):
        g = random_graph
        params, _ = fresh_state(g)
        zero_feats = np.zeros_like(g.node_feats)
        state = MemoryState.initial(params, zero_feats, g.d_e)
        for step in range(5):
            memory_step(params, state, step, step + 1, float(step), np.zeros(g.d_e))
        assert np.all(state.s == 0)

    def test_both_endpoints_read_old_values(self, random_graph):
        g = random_graph
        params, state = fresh_state(g)
        before = state.s.copy()
        memory_step(params, state, 2, 3, 1.0, g.edge_feats[0])
        np.testing.assert_allclose(state.msg_other[3], before[2])
        np.testing.assert_allclose(state.msg_other[2], before[3])

    def test_out_of_order_interaction(self, random_graph):
        g = random_graph
        params, state = fresh_state(g)
        memory_step(params, state, 0, 1, 5.0, g.edge_feats[0])
        with pytest.raises(ModelError):
            memory_step(params, state, 1, 2, 4.0, g.edge_feats[1])

    def test_time_encoding_extends_message(self, random_graph):
        g = random_graph
        enc = TimeEncoder(3)
        params = param_init(
            memory_param_specs(4, g.d_n, g.d_e + 3), np.random.default_rng(0), 4
        )
        state = MemoryState.initial(params, g.node_feats, g.d_e + 3)
        memory_step(params, state, 0, 1, 1.0, g.edge_feats[0], enc)
        memory_step(params, state, 0, 2, 3.0, g.edge_feats[1], enc)
        np.testing.assert_allclose(state.msg_edge[0][g.d_e :], enc(2.0))
        np.testing.assert_allclose(state.msg_edge[2][g.d_e :], enc(0.0))


class TestMemoryEncoder:
    """Test replay and the StopGrad gradient of the memory encoder."""

    def test_replay_is_deterministic(self, memory_model):
        enc = memory_model.encoder
        enc.replay(memory_model.params, 150)
        first = enc.state.s.copy()
        enc.replay(memory_model.params, 150)
        assert np.array_equal(first, enc.state.s)

    def test_replay_depends_on_parameters(self, memory_model):
        enc = memory_model.encoder
        params = memory_model.params
        enc.replay(params, 150)
        before = enc.state.s.copy()
        lo, hi = params.layout.offsets()["memory.W1"]
        vector = params.vector.copy()
        vector[lo:hi] *= 1.5
        enc.replay(params.with_vector(vector), 150)
        assert not np.allclose(before, enc.state.s)

    def test_unseen_node_embeds_as_initial_memory(self, memory_model, random_graph):
        memory_model.reset_state()
        h, _ = memory_model.encoder.encode(memory_model.params, np.array([3]), np.array([0.0]))
        W0 = memory_model.params["memory.W0"]
        np.testing.assert_allclose(h[0], W0 @ random_graph.node_feats[3])

    def test_gradient_stops_at_stored_memory(self, memory_model, random_graph):
        """The hand gradient equals the detached finite difference, not the through-time one."""
        g = random_graph
        enc = memory_model.encoder
        params = memory_model.params
        end = 150
        batch = QueryBatch(g.src[end : end + 4], g.ts[end : end + 4], g.dst[end : end + 4])

        enc.replay(params, end)
        analytic = model_grad(memory_model, batch)
        detached = finite_difference_grad(memory_model, batch)
        assert relative_error(analytic, detached) <= 1e-5

        def through_time(theta):
            p = params.with_vector(theta)
            enc.replay(p, end)
            return objective(memory_model, batch, params=p)

        full = numeric_grad(through_time, params.vector, 1e-4)
        assert relative_error(full, detached) > 1e-6

    def test_frozen_initial_projection(self, memory_model):
        assert "memory.W0" in memory_model.params.frozen
        assert "memory.W0" not in memory_model.params.layout.names
