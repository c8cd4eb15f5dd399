"""
Tests for the link-prediction trainer, early stopping and online SGD.
"""

import numpy as np
import pytest

from link_training import (
    HISTORY_COLUMNS,
    Adam,
    EarlyStopMonitor,
    SGD,
    TrainConfig,
    TrainHistory,
    TrainingError,
    chronological_batches,
    history_from_csv,
    history_to_csv,
    link_example_stream,
    online_sgd,
    seed_streams,
    train_link_prediction,
)
from temporal_graph import SplitSpec
from tgl_models import LinearModel, ModelConfig, QueryBatch, build_model

TINY = dict(k=3, hidden=8, time_dim=4, mlp_hidden=8)


def tiny_model(g, method="stone", **overrides):
    return build_model(ModelConfig(method=method, **{**TINY, **overrides}), g)


@pytest.fixture
def scalar_model():
    model = LinearModel(1)
    params = model.init_params(np.random.default_rng(0))
    model.params = params.with_vector(np.zeros(1))
    return model


class TestTrainConfig:
    def test_defaults(self):
        cfg = TrainConfig()
        assert (cfg.lr, cfg.weight_decay, cfg.batch_size) == (1e-4, 1e-6, 600)
        assert (cfg.max_epochs, cfg.patience, cfg.optimizer) == (100, 20, "adam")

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"lr": 0.0},
            {"weight_decay": -1.0},
            {"patience": 0},
            {"batch_size": 0},
            {"max_epochs": -1},
            {"optimizer": "rmsprop"},
            {"loss": "hinge"},
            {"dtype": "float16"},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(TrainingError):
            TrainConfig(**kwargs)


class TestOptimizers:
    def test_sgd_step(self):
        theta = SGD(lr=0.1).step(np.array([1.0, 2.0]), np.array([1.0, -1.0]))
        np.testing.assert_allclose(theta, [0.9, 2.1])

    def test_sgd_weight_decay(self):
        theta = SGD(lr=0.5, weight_decay=1.0).step(np.array([2.0]), np.array([0.0]))
        np.testing.assert_allclose(theta, [1.0])

    def test_adam_first_step_is_lr_sized(self):
        theta = Adam(lr=0.01).step(np.zeros(3), np.array([5.0, -0.1, 2.0]))
        np.testing.assert_allclose(theta, [-0.01, 0.01, -0.01], rtol=1e-6)


class TestEarlyStopMonitor:
    """Test relative-improvement early stopping."""

    def test_stops_after_patience(self):
        monitor = EarlyStopMonitor(max_round=2)
        assert not monitor.early_stop_check(0.5)
        assert not monitor.early_stop_check(0.6)
        assert not monitor.early_stop_check(0.6)
        assert monitor.early_stop_check(0.59)
        assert monitor.best_epoch == 1

    def test_improvement_resets_counter(self):
        monitor = EarlyStopMonitor(max_round=2)
        for value in (0.5, 0.4, 0.7, 0.6):
            assert not monitor.early_stop_check(value)
        assert monitor.best_epoch == 2
        assert not monitor.improved

    def test_lower_is_better(self):
        monitor = EarlyStopMonitor(max_round=1, higher_better=False)
        monitor.early_stop_check(1.0)
        monitor.early_stop_check(0.5)
        assert monitor.improved
        assert monitor.early_stop_check(0.7)


class TestHelpers:
    def test_chronological_batches(self):
        assert list(chronological_batches(0, 7, 3)) == [(0, 3), (3, 6), (6, 7)]

    def test_empty_range(self):
        assert list(chronological_batches(5, 5, 3)) == []

    def test_seed_streams_are_independent_and_reproducible(self):
        a = [rng.random() for rng in seed_streams(0)]
        b = [rng.random() for rng in seed_streams(0)]
        assert a == b
        assert len(set(a)) == 3

    def test_history_csv(self, tmp_path):
        history = TrainHistory()
        history.append(0, 0.7, 0.65, 0.6, 1.5)
        history.append(1, 0.8, 0.7, 0.5, 1.4)
        path = history_to_csv(history, tmp_path / "out" / "history.csv")
        assert path.read_text().splitlines()[0] == ",".join(HISTORY_COLUMNS)
        restored = history_from_csv(path)
        assert restored.epochs == [0, 1]
        assert restored.val_ap == pytest.approx([0.65, 0.7])

    def test_history_missing_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("epoch,loss\n0,0.5\n")
        with pytest.raises(TrainingError):
            history_from_csv(path)


class TestTrainLinkPrediction:
    """Test the chronological trainer."""

    def test_zero_epochs(self, planted_graph, planted_split):
        model = tiny_model(planted_graph)
        result = train_link_prediction(model, planted_graph, planted_split, TrainConfig(max_epochs=0))
        assert len(result.history) == 0
        assert result.best_epoch == -1
        assert result.params is model.params

    def test_empty_training_split(self, planted_graph):
        split = SplitSpec(0, 0, planted_graph.num_edges, frozenset())
        with pytest.raises(TrainingError):
            train_link_prediction(tiny_model(planted_graph), planted_graph, split)

    def test_deterministic(self, planted_graph, planted_split):
        cfg = TrainConfig(lr=1e-3, batch_size=50, max_epochs=2, seed=4)
        a = train_link_prediction(tiny_model(planted_graph), planted_graph, planted_split, cfg)
        b = train_link_prediction(tiny_model(planted_graph), planted_graph, planted_split, cfg)
        assert np.array_equal(a.params.vector, b.params.vector)
        assert a.history.loss == b.history.loss

    def test_history_is_recorded(self, planted_graph, planted_split):
        cfg = TrainConfig(lr=1e-3, batch_size=100, max_epochs=3, patience=5)
        result = train_link_prediction(tiny_model(planted_graph), planted_graph, planted_split, cfg)
        assert result.history.epochs == [0, 1, 2]
        assert all(0.0 <= ap <= 1.0 for ap in result.history.val_ap)
        assert 0 <= result.best_epoch < 3

    def test_training_dtype(self, planted_graph, planted_split):
        cfg = TrainConfig(max_epochs=1, batch_size=100)
        result = train_link_prediction(tiny_model(planted_graph), planted_graph, planted_split, cfg)
        assert result.params.dtype == np.float32

    def test_loss_decreases(self, planted_graph, planted_split):
        cfg = TrainConfig(lr=1e-2, batch_size=50, max_epochs=6, patience=10, dtype="float64")
        result = train_link_prediction(tiny_model(planted_graph), planted_graph, planted_split, cfg)
        assert result.history.loss[-1] < result.history.loss[0]

    @pytest.mark.parametrize("method", ["gnn", "rnn", "memory"])
    def test_other_families_train(self, planted_graph, planted_split, method):
        cfg = TrainConfig(lr=1e-3, batch_size=100, max_epochs=1)
        model = tiny_model(planted_graph, method)
        result = train_link_prediction(model, planted_graph, planted_split, cfg)
        assert len(result.history) == 1
        assert np.all(np.isfinite(result.params.vector))

    @pytest.mark.slow
    def test_stone_learns_planted_recency(self, planted_graph, planted_split):
        cfg = TrainConfig(lr=1e-3, batch_size=50, max_epochs=30, patience=30, dtype="float64")
        model = tiny_model(planted_graph, k=10, hidden=16, time_dim=8, mlp_hidden=16)
        result = train_link_prediction(model, planted_graph, planted_split, cfg)
        assert max(result.history.val_ap) > 0.7


class TestOnlineSgd:
    """Test one-example-per-step logistic SGD."""

    def _stream(self, n, y=1.0):
        return [(np.ones((1, 1)), y) for _ in range(n)]

    def test_zero_step_size_keeps_parameters(self, scalar_model):
        scalar_model.params = scalar_model.params.with_vector(np.array([0.3]))
        result = online_sgd(scalar_model, self._stream(5), eta=0.0, n=5)
        np.testing.assert_array_equal(result.final.vector, [0.3])
        assert np.all(result.trajectory == 0.3)

    def test_first_step_from_zero(self, scalar_model):
        result = online_sgd(scalar_model, self._stream(1), eta=0.2, n=1)
        np.testing.assert_allclose(result.final.vector, [0.1])
        assert result.losses[0] == pytest.approx(np.log(2.0))

    def test_trajectory_and_choice(self, scalar_model):
        result = online_sgd(scalar_model, self._stream(6), eta=0.1, n=6, rng=np.random.default_rng(3))
        assert result.trajectory.shape == (6, 1)
        assert result.trajectory[0, 0] == 0.0
        assert 0 <= result.index < 6
        np.testing.assert_array_equal(result.theta_tilde.vector, result.trajectory[result.index])
        assert result.grad_evals == 6
        assert np.all(np.diff(result.trajectory[:, 0]) > 0)

    def test_labels_must_be_plus_minus_one(self, scalar_model):
        with pytest.raises(TrainingError):
            online_sgd(scalar_model, self._stream(2, y=0.0), eta=0.1, n=2)

    def test_stream_too_short(self, scalar_model):
        with pytest.raises(TrainingError):
            online_sgd(scalar_model, self._stream(2), eta=0.1, n=3)

    def test_needs_positive_n(self, scalar_model):
        with pytest.raises(TrainingError):
            online_sgd(scalar_model, self._stream(2), eta=0.1, n=0)

    def test_link_stream_alternates(self, planted_graph, planted_split):
        items = list(link_example_stream(planted_graph, planted_split, np.random.default_rng(0)))
        _, train_end = planted_split.train_range
        assert len(items) == 2 * train_end
        assert [y for _, y, _ in items[:4]] == [1.0, -1.0, 1.0, -1.0]
        pos, neg = items[0][0], items[1][0]
        assert isinstance(pos, QueryBatch)
        assert pos.src[0] == neg.src[0] and pos.dst[0] != neg.dst[0]
        assert items[0][2] is None and items[1][2][3] == 0

    def test_memory_model_on_link_stream(self, planted_graph, planted_split):
        model = tiny_model(planted_graph, "memory")
        params = model.init_params(np.random.default_rng(0), m=8)
        model.reset_state(params)
        stream = link_example_stream(planted_graph, planted_split, np.random.default_rng(1))
        result = online_sgd(model, stream, eta=0.05, n=20)
        assert result.trajectory.shape == (20, params.count)
        # ten interactions were fed to memory
        assert int(np.sum(model.encoder.state.has_msg)) > 0
