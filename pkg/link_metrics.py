"""
Link-prediction metrics and the evaluation driver.

- Inputs: score/label arrays, or a model plus a graph split
- Outputs: AP, AUC, Recall@K, MRR as a MetricsReport (JSON, run-ledger CSV)
- Features:
  * AP over the stable score-sorted sequence
  * AUC as the Mann-Whitney rank-sum statistic (ties count half)
  * ranking against sampled negatives, ties counting half a rank
  * transductive and inductive evaluation with chronological scoring
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from neighbor_sampling import negative_pool, sample_negatives
from temporal_graph import SplitSpec, StglError, TemporalGraph
from tgl_models import QueryBatch

logger = logging.getLogger(__name__)

TRANSDUCTIVE = "transductive"
INDUCTIVE = "inductive"
SETTINGS = (TRANSDUCTIVE, INDUCTIVE)
DEFAULT_RANK_NEGATIVES = 100
DEFAULT_RECALL_KS = (1, 5)
LEDGER_COLUMNS = ["method", "dataset", "seed", "setting", "ap", "auc", "r1", "r5", "mrr"]

# keeps one forward pass to a bounded number of link queries
MAX_QUERIES_PER_FORWARD = 8192


class MetricError(StglError, ValueError):
    """Metric input with a single class, or nothing to evaluate."""


def _scores_and_labels(scores, labels) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise MetricError(f"{scores.shape[0]} scores for {labels.shape[0]} labels")
    labels = labels.astype(bool)
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.shape[0]:
        raise MetricError("metric needs at least one positive and one negative")
    return scores, labels


def average_precision(scores, labels) -> float:
    """
    Σ_k (R_k − R_{k−1}) · P_k over the scores sorted descending.

    Ties keep input order (stable sort).
    """
    scores, labels = _scores_and_labels(scores, labels)
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    precision = np.cumsum(hits) / np.arange(1, hits.shape[0] + 1)
    return float(precision[hits].mean())


def auc_roc(scores, labels) -> float:
    """P(score⁺ > score⁻) + ½ P(tie), via average ranks."""
    scores, labels = _scores_and_labels(scores, labels)
    ranks = rankdata(scores)
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def positive_ranks(pos_scores, neg_scores) -> np.ndarray:
    """
    Rank of each positive among its own negatives.

    r = 1 + #{negatives scoring higher} + ½ #{negatives tied with it}.
    neg_scores has one row per positive.
    """
    pos = np.asarray(pos_scores, dtype=np.float64).reshape(-1)
    neg = np.asarray(neg_scores, dtype=np.float64).reshape(pos.shape[0], -1)
    greater = (neg > pos[:, None]).sum(axis=1)
    ties = (neg == pos[:, None]).sum(axis=1)
    return 1.0 + greater + 0.5 * ties


def rank_metrics(
    pos_score: float, neg_scores, ks: Sequence[int] = DEFAULT_RECALL_KS
) -> Tuple[float, ...]:
    """(recall@k for each k, reciprocal rank) for one positive."""
    r = float(positive_ranks([pos_score], [neg_scores])[0])
    return tuple(float(r <= k) for k in ks) + (1.0 / r,)


@dataclass
class MetricsReport:
    ap: float
    auc: float
    recall_at: Dict[int, float]
    mrr: float
    setting: str = TRANSDUCTIVE
    n_eval: int = 0

    def to_dict(self) -> dict:
        data = asdict(self)
        data["recall_at"] = {str(k): v for k, v in self.recall_at.items()}
        return data

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        data = dict(data)
        data["recall_at"] = {int(k): float(v) for k, v in data["recall_at"].items()}
        return cls(**data)


def metrics_from_scores(
    pos_scores,
    neg_scores,
    rank_neg_scores=None,
    ks: Sequence[int] = DEFAULT_RECALL_KS,
    setting: str = TRANSDUCTIVE,
) -> MetricsReport:
    """AP/AUC over positives vs their paired negatives; ranks over rank_neg_scores."""
    pos = np.asarray(pos_scores, dtype=np.float64).reshape(-1)
    neg = np.asarray(neg_scores, dtype=np.float64).reshape(-1)
    if pos.size == 0:
        raise MetricError("no positive interactions to evaluate")
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(pos.size), np.zeros(neg.size)])
    ranks = positive_ranks(pos, rank_neg_scores if rank_neg_scores is not None else neg)
    return MetricsReport(
        ap=average_precision(scores, labels),
        auc=auc_roc(scores, labels),
        recall_at={int(k): float(np.mean(ranks <= k)) for k in ks},
        mrr=float(np.mean(1.0 / ranks)),
        setting=setting,
        n_eval=int(pos.size),
    )


def forward_in_chunks(model, batch: QueryBatch, params=None, chunk: int = MAX_QUERIES_PER_FORWARD):
    """Model outputs for a large batch, evaluated chunk by chunk (no cache kept)."""
    outputs = []
    for lo in range(0, len(batch), chunk):
        part = batch.subset(np.arange(lo, min(lo + chunk, len(batch))))
        out, _ = model.forward(part, params)
        outputs.append(np.asarray(out, dtype=np.float64))
    if not outputs:
        return np.zeros(0)
    return np.concatenate(outputs)


@dataclass
class StreamScores:
    """Scores collected while walking an interaction range in time order."""

    pos: List[np.ndarray] = field(default_factory=list)
    neg: List[np.ndarray] = field(default_factory=list)
    rank_neg: List[np.ndarray] = field(default_factory=list)

    def arrays(self) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
        pos = np.concatenate(self.pos) if self.pos else np.zeros(0)
        neg = np.concatenate(self.neg) if self.neg else np.zeros(0)
        rank = np.concatenate(self.rank_neg) if self.rank_neg else None
        return pos, neg, rank


def score_stream(
    model,
    g: TemporalGraph,
    start: int,
    end: int,
    pool: np.ndarray,
    rng: np.random.Generator,
    batch_size: int = 600,
    n_rank_negatives: int = 0,
    keep: Optional[np.ndarray] = None,
    params=None,
) -> StreamScores:
    """
    Score interactions [start, end) in chronological batches.

    Every kept positive is paired with one uniform negative (and
    n_rank_negatives more for ranking). All interactions of a batch are fed to
    model.observe after it is scored, including the ones `keep` filters out,
    so stateful models see the full stream.
    """
    collected = StreamScores()
    for lo in range(start, end, batch_size):
        idx = np.arange(lo, min(lo + batch_size, end))
        chosen = idx if keep is None else idx[keep[idx]]
        if chosen.size:
            src, dst, ts = g.src[chosen], g.dst[chosen], g.ts[chosen]
            negs = sample_negatives(rng, pool, dst)
            queries = [QueryBatch(src, ts, dst), QueryBatch(src, ts, negs)]
            if n_rank_negatives:
                rank_dst = sample_negatives(rng, pool, np.repeat(dst, n_rank_negatives))
                queries.append(
                    QueryBatch(
                        np.repeat(src, n_rank_negatives),
                        np.repeat(ts, n_rank_negatives),
                        rank_dst,
                    )
                )
            out = forward_in_chunks(model, QueryBatch.concat(queries), params)
            n = chosen.size
            collected.pos.append(out[:n])
            collected.neg.append(out[n : 2 * n])
            if n_rank_negatives:
                collected.rank_neg.append(out[2 * n :].reshape(n, n_rank_negatives))
        if model.stateful:
            model.observe(g.src[idx], g.dst[idx], g.ts[idx], idx, params)
    return collected


def inductive_mask(g: TemporalGraph, split: SplitSpec) -> np.ndarray:
    """True for interactions with at least one inductive endpoint."""
    nodes = split.inductive_array()
    return np.isin(g.src, nodes) | np.isin(g.dst, nodes)


def evaluate(
    model,
    g: TemporalGraph,
    split: SplitSpec,
    setting: str = TRANSDUCTIVE,
    seed: int = 0,
    n_rank_negatives: int = DEFAULT_RANK_NEGATIVES,
    batch_size: int = 600,
    ks: Sequence[int] = DEFAULT_RECALL_KS,
    params=None,
) -> MetricsReport:
    """
    Score the test range of `split` with the model's current parameters.

    Stateful models replay the stream up to the test boundary first. The
    inductive setting keeps only test edges touching an inductive node and
    draws negatives from the inductive nodes.
    """
    if setting not in SETTINGS:
        raise MetricError(f"unknown evaluation setting {setting!r}; choose from {SETTINGS}")
    start, end = split.test_range
    if end <= start:
        raise MetricError("test split is empty")

    if setting == INDUCTIVE:
        if not split.inductive_nodes:
            raise MetricError("no inductive nodes in this split")
        keep = inductive_mask(g, split)
        pool = negative_pool(g, split.inductive_nodes)
        if not keep[start:end].any():
            raise MetricError("no test interaction touches an inductive node")
    else:
        keep = None
        pool = negative_pool(g)

    if model.stateful:
        model.reset_state(params)
        for lo in range(0, start, batch_size):
            idx = np.arange(lo, min(lo + batch_size, start))
            model.observe(g.src[idx], g.dst[idx], g.ts[idx], idx, params)

    rng = np.random.default_rng(seed)
    collected = score_stream(
        model, g, start, end, pool, rng, batch_size, n_rank_negatives, keep, params
    )
    pos, neg, rank_neg = collected.arrays()
    report = metrics_from_scores(pos, neg, rank_neg, ks, setting)
    logger.info(
        f"📊 {setting} test: AP={report.ap:.4f} AUC={report.auc:.4f} "
        f"MRR={report.mrr:.4f} over {report.n_eval} interactions"
    )
    return report


def aggregate_reports(reports: Sequence[MetricsReport]) -> Dict[str, Tuple[float, float]]:
    """Mean and (population) standard deviation of every metric across runs."""
    if not reports:
        raise MetricError("no reports to aggregate")
    rows = [_ledger_metrics(r) for r in reports]
    frame = pd.DataFrame(rows)
    return {
        col: (float(frame[col].mean()), float(frame[col].std(ddof=0)))
        for col in frame.columns
    }


def _ledger_metrics(report: MetricsReport) -> dict:
    return {
        "ap": report.ap,
        "auc": report.auc,
        "r1": report.recall_at.get(1, float("nan")),
        "r5": report.recall_at.get(5, float("nan")),
        "mrr": report.mrr,
    }


def append_run_ledger(
    path, method: str, dataset: str, seed: int, report: MetricsReport
) -> Path:
    """Append one row to the run-ledger CSV, writing the header for a new file."""
    path = Path(path)
    row = {"method": method, "dataset": dataset, "seed": seed, "setting": report.setting}
    row.update(_ledger_metrics(report))
    frame = pd.DataFrame([row], columns=LEDGER_COLUMNS)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, mode="a", header=not path.exists(), index=False)
    logger.debug(f"Ledger row appended to {path}")
    return path


def read_run_ledger(path) -> pd.DataFrame:
    return pd.read_csv(path)
