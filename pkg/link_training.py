"""
Training loops for temporal link prediction.

- Experiment mode: chronological mini-batches, one sampled negative per
  positive, binary cross-entropy on classifier logits, early stopping on
  validation AP, best-validation parameters returned.
- Theory mode: single-example online SGD on the ±1 logistic loss, returning
  the parameter trajectory and a uniformly drawn iterate.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from link_metrics import average_precision, score_stream
from neighbor_sampling import negative_pool, sample_negatives
from nn_layers import ModelParams, bce_with_logits, logistic_loss
from temporal_graph import SplitSpec, StglError, TemporalGraph
from tgl_models import QueryBatch

logger = logging.getLogger(__name__)

OPTIMIZERS = ("adam", "sgd")
LOSSES = ("bce", "logistic")
HISTORY_COLUMNS = ["epoch", "train_ap", "val_ap", "loss", "seconds"]

# validation negatives are redrawn from the same stream every epoch
VALIDATION_SEED_OFFSET = 7919


class TrainingError(StglError, ValueError):
    """Empty training split, bad labels, or an exhausted example stream."""


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings; defaults are the published ones."""

    lr: float = 1e-4
    weight_decay: float = 1e-6
    batch_size: int = 600
    max_epochs: int = 100
    patience: int = 20
    seed: int = 0
    optimizer: str = "adam"
    loss: str = "bce"
    negatives_per_positive: int = 1
    dtype: str = "float32"
    show_progress: bool = False

    def __post_init__(self):
        if not self.lr > 0:
            raise TrainingError(f"lr must be > 0, got {self.lr}")
        if self.weight_decay < 0:
            raise TrainingError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.patience < 1:
            raise TrainingError(f"patience must be >= 1, got {self.patience}")
        if self.batch_size < 1 or self.max_epochs < 0:
            raise TrainingError("batch_size must be >= 1 and max_epochs >= 0")
        if self.negatives_per_positive < 1:
            raise TrainingError("negatives_per_positive must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise TrainingError(f"unknown optimizer {self.optimizer!r}; choose from {OPTIMIZERS}")
        if self.loss not in LOSSES:
            raise TrainingError(f"unknown loss {self.loss!r}; choose from {LOSSES}")
        if self.dtype not in ("float32", "float64"):
            raise TrainingError(f"dtype must be float32 or float64, got {self.dtype!r}")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class TrainHistory:
    epochs: List[int] = field(default_factory=list)
    train_ap: List[float] = field(default_factory=list)
    val_ap: List[float] = field(default_factory=list)
    loss: List[float] = field(default_factory=list)
    seconds: List[float] = field(default_factory=list)

    def append(self, epoch: int, train_ap: float, val_ap: float, loss: float, seconds: float):
        self.epochs.append(int(epoch))
        self.train_ap.append(float(train_ap))
        self.val_ap.append(float(val_ap))
        self.loss.append(float(loss))
        self.seconds.append(float(seconds))

    def __len__(self) -> int:
        return len(self.epochs)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "epoch": self.epochs,
                "train_ap": self.train_ap,
                "val_ap": self.val_ap,
                "loss": self.loss,
                "seconds": self.seconds,
            },
            columns=HISTORY_COLUMNS,
        )


def history_to_csv(history: TrainHistory, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    history.to_frame().to_csv(path, index=False)
    return path


def history_from_csv(path) -> TrainHistory:
    frame = pd.read_csv(path)
    missing = [c for c in HISTORY_COLUMNS if c not in frame.columns]
    if missing:
        raise TrainingError(f"{path}: history is missing columns {missing}")
    history = TrainHistory()
    for row in frame.itertuples(index=False):
        history.append(row.epoch, row.train_ap, row.val_ap, row.loss, row.seconds)
    return history


class SGD:
    def __init__(self, lr: float, weight_decay: float = 0.0):
        self.lr = lr
        self.weight_decay = weight_decay

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        grad = grad + self.weight_decay * theta
        return theta - self.lr * grad


class Adam:
    """Adaptive moments over a flat vector; weight decay enters the gradient."""

    def __init__(
        self,
        lr: float,
        weight_decay: float = 0.0,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: Optional[np.ndarray] = None
        self.v: Optional[np.ndarray] = None
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        grad = grad + self.weight_decay * theta
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(cfg: TrainConfig):
    if cfg.optimizer == "sgd":
        return SGD(cfg.lr, cfg.weight_decay)
    return Adam(cfg.lr, cfg.weight_decay)


class EarlyStopMonitor:
    """Counts epochs without relative improvement and remembers the best one."""

    def __init__(self, max_round: int = 20, higher_better: bool = True, tolerance: float = 1e-10):
        self.max_round = max_round
        self.higher_better = higher_better
        self.tolerance = tolerance
        self.num_round = 0
        self.epoch_count = 0
        self.best_epoch = 0
        self.last_best: Optional[float] = None

    def early_stop_check(self, curr_val: float) -> bool:
        """Record one epoch's metric; True once patience is exhausted."""
        if not self.higher_better:
            curr_val = -curr_val
        if self.last_best is None:
            self.last_best = curr_val
            self.best_epoch = self.epoch_count
        elif (curr_val - self.last_best) / max(abs(self.last_best), 1e-12) > self.tolerance:
            self.last_best = curr_val
            self.num_round = 0
            self.best_epoch = self.epoch_count
        else:
            self.num_round += 1
        self.epoch_count += 1
        return self.num_round >= self.max_round

    @property
    def improved(self) -> bool:
        """Whether the last recorded epoch is the best so far."""
        return self.best_epoch == self.epoch_count - 1


def chronological_batches(start: int, end: int, batch_size: int) -> Iterator[Tuple[int, int]]:
    if batch_size < 1:
        raise TrainingError(f"batch_size must be >= 1, got {batch_size}")
    for lo in range(start, end, batch_size):
        yield lo, min(lo + batch_size, end)


@dataclass
class TrainResult:
    params: ModelParams
    history: TrainHistory
    best_epoch: int
    stopped_early: bool = False


def seed_streams(seed: int) -> Tuple[np.random.Generator, ...]:
    """Independent (init, negatives, sampling) generators derived from one seed."""
    return tuple(np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))


def _validation_ap(model, g, split, pool, seed, batch_size, params) -> float:
    start, end = split.val_range
    if end <= start:
        return float("nan")
    rng = np.random.default_rng(seed + VALIDATION_SEED_OFFSET)
    pos, neg, _ = score_stream(model, g, start, end, pool, rng, batch_size, params=params).arrays()
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(pos.size), np.zeros(neg.size)])
    return average_precision(scores, labels)


def train_link_prediction(
    model,
    g: TemporalGraph,
    split: SplitSpec,
    cfg: Optional[TrainConfig] = None,
    hidden: Optional[int] = None,
) -> TrainResult:
    """
    Train a link model over the training range in time order.

    Parameters are drawn from the run seed unless the model already holds
    some. Stateful models rebuild their memory from the start of the stream
    every epoch and keep observing through validation.

    Args:
        model: TemporalModel with a link head
        g: temporal graph
        split: chronological split of g
        cfg: optimisation settings
        hidden: initialisation scale m (defaults to the encoder width)

    Returns:
        TrainResult holding the best-validation parameters and the history.
    """
    cfg = cfg or TrainConfig()
    _, train_end = split.train_range
    if train_end <= 0:
        raise TrainingError("training split is empty")

    init_rng, neg_rng, _ = seed_streams(cfg.seed)
    dtype = np.dtype(cfg.dtype)
    if model.params is None:
        model.init_params(init_rng, m=hidden or model.encoder.d_out, dtype=dtype)
    params = model.params.astype(dtype)
    model.params = params
    history = TrainHistory()
    if cfg.max_epochs == 0:
        return TrainResult(params=params, history=history, best_epoch=-1)

    pool = negative_pool(g)
    optimizer = make_optimizer(cfg)
    monitor = EarlyStopMonitor(cfg.patience)
    best = params.copy()
    stopped = False
    n_neg = cfg.negatives_per_positive

    epochs = range(cfg.max_epochs)
    if cfg.show_progress:
        epochs = tqdm(epochs, desc=f"Training {getattr(model, 'method', 'model')}", unit="epoch")

    for epoch in epochs:
        started = time.perf_counter()
        if model.stateful:
            model.reset_state(params)
        scores, labels, losses = [], [], []
        for lo, hi in chronological_batches(0, train_end, cfg.batch_size):
            idx = np.arange(lo, hi)
            src, dst, ts = g.src[idx], g.dst[idx], g.ts[idx]
            negs = sample_negatives(neg_rng, pool, np.tile(dst, n_neg))
            batch = QueryBatch(
                np.concatenate([src, np.tile(src, n_neg)]),
                np.concatenate([ts, np.tile(ts, n_neg)]),
                np.concatenate([dst, negs]),
            )
            y = np.concatenate([np.ones(idx.size), np.zeros(idx.size * n_neg)])
            logits, cache = model.forward(batch, params)
            if cfg.loss == "logistic":
                loss, dlogits = logistic_loss(logits, 2.0 * y - 1.0)
            else:
                loss, dlogits = bce_with_logits(logits, y)
            grad = model.backward(cache, dlogits, params=params)
            params = params.with_vector(optimizer.step(params.vector, grad))
            model.params = params
            if model.stateful:
                model.observe(src, dst, ts, idx, params)
            scores.append(np.asarray(logits, dtype=np.float64))
            labels.append(y)
            losses.append(loss)
            logger.debug(f"epoch {epoch} batch [{lo}, {hi}): loss={loss:.5f}")

        train_ap = average_precision(np.concatenate(scores), np.concatenate(labels))
        val_ap = _validation_ap(model, g, split, pool, cfg.seed, cfg.batch_size, params)
        seconds = time.perf_counter() - started
        mean_loss = float(np.mean(losses))
        history.append(epoch, train_ap, val_ap, mean_loss, seconds)
        logger.info(
            f"📈 Epoch {epoch}: loss={mean_loss:.4f} train_ap={train_ap:.4f} "
            f"val_ap={val_ap:.4f} ({seconds:.1f}s)"
        )

        tracked = val_ap if np.isfinite(val_ap) else train_ap
        stop = monitor.early_stop_check(tracked)
        if monitor.improved:
            best = params.copy()
        if stop:
            stopped = True
            logger.info(
                f"⏹️ No validation improvement for {cfg.patience} epochs; "
                f"best epoch {monitor.best_epoch}"
            )
            break

    model.params = best
    return TrainResult(
        params=best, history=history, best_epoch=monitor.best_epoch, stopped_early=stopped
    )


@dataclass
class OnlineSgdResult:
    trajectory: np.ndarray
    theta_tilde: ModelParams
    index: int
    losses: np.ndarray
    final: ModelParams
    grad_evals: int


def _check_pm_one(y) -> float:
    y = float(np.asarray(y).reshape(-1)[0])
    if y not in (-1.0, 1.0):
        raise TrainingError(f"online SGD needs labels in {{-1, +1}}, got {y}")
    return y


def online_sgd(
    model,
    stream: Iterable,
    eta: float,
    n: int,
    rng: Optional[np.random.Generator] = None,
    params: Optional[ModelParams] = None,
) -> OnlineSgdResult:
    """
    One logistic-loss SGD step per streamed example.

    Stream items are (batch, y) or (batch, y, interaction); an interaction
    (src, dst, t, index) is fed to the model's memory after the step. The
    trajectory holds θ_0..θ_{n−1}; θ̃ is drawn uniformly from it.
    """
    if n < 1:
        raise TrainingError(f"online SGD needs n >= 1, got {n}")
    rng = rng if rng is not None else np.random.default_rng(0)
    params = params if params is not None else model.params
    if params is None:
        raise TrainingError("model parameters are not initialised")
    items = iter(stream)
    trajectory = np.empty((n, params.count), dtype=params.dtype)
    losses = np.empty(n)
    for i in range(n):
        try:
            item = next(items)
        except StopIteration:
            raise TrainingError(f"example stream ran out after {i} of {n} steps") from None
        batch, y = item[0], _check_pm_one(item[1])
        trajectory[i] = params.vector
        labels = np.array([y])
        outputs, cache = model.forward(batch, params)
        losses[i], seed = logistic_loss(outputs, labels)
        grad = model.backward(cache, seed, params=params)
        params = params.with_vector(params.vector - eta * grad)
        if len(item) > 2 and item[2] is not None and getattr(model, "stateful", False):
            src, dst, t, eidx = item[2]
            model.observe([src], [dst], [t], [eidx], params)
    pick = int(rng.integers(n))
    logger.info(f"🎲 Online SGD: {n} steps, returning iterate {pick}")
    return OnlineSgdResult(
        trajectory=trajectory,
        theta_tilde=params.with_vector(trajectory[pick].copy()),
        index=pick,
        losses=losses,
        final=params,
        grad_evals=n,
    )


def link_example_stream(
    g: TemporalGraph, split: SplitSpec, rng: np.random.Generator
) -> Iterator[Tuple[QueryBatch, float, Optional[tuple]]]:
    """
    Alternating ±1 link examples over the training range.

    Each interaction yields its positive link, then a sampled negative that
    carries the interaction so memory advances only after both are seen.
    """
    pool = negative_pool(g)
    _, end = split.train_range
    for i in range(end):
        src, dst, t = int(g.src[i]), int(g.dst[i]), float(g.ts[i])
        neg = int(sample_negatives(rng, pool, np.array([dst]))[0])
        yield QueryBatch([src], [t], [dst]), 1.0, None
        yield QueryBatch([src], [t], [neg]), -1.0, (src, dst, t, i)
