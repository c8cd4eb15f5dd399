"""
Synthetic interaction streams with a planted recency pattern.

Each event picks a uniform source; with probability repeat_prob it goes
back to one of the source's last few partners, otherwise to a fresh
uniform destination. Gaps between events are exponential, so a model that
looks at recent 1-hop neighborhoods can learn the pattern.
"""

import logging
from collections import deque
from typing import Deque, Dict

import numpy as np

from temporal_graph import GraphValidationError, TemporalGraph, from_arrays

logger = logging.getLogger(__name__)

RECENT_PARTNERS = 3


def _unit_rows(rng: np.random.Generator, rows: int, dim: int) -> np.ndarray:
    if dim == 0:
        return np.zeros((rows, 0))
    x = rng.normal(size=(rows, dim))
    return x / np.maximum(np.linalg.norm(x, axis=1, keepdims=True), 1e-12)


def generate_planted_stream(
    num_nodes: int,
    num_edges: int,
    repeat_prob: float = 0.8,
    seed: int = 0,
    d_e: int = 4,
    d_n: int = 8,
    window: int = RECENT_PARTNERS,
    mean_gap: float = 1.0,
) -> TemporalGraph:
    """
    Generate a time-ordered stream over `num_nodes` nodes.

    Args:
        num_nodes: node count (>= 2)
        num_edges: interaction count
        repeat_prob: probability of repeating a recent partner
        seed: generator seed
        d_e, d_n: edge and node feature dimensions (unit-norm Gaussian rows)
        window: how many recent partners a repeat chooses from
        mean_gap: mean of the exponential inter-event gaps

    Returns:
        TemporalGraph; ids 0..num_nodes-1 all carry node features.
    """
    if num_nodes < 2:
        raise GraphValidationError(f"need at least 2 nodes, got {num_nodes}")
    if num_edges < 0 or not 0.0 <= repeat_prob <= 1.0 or window < 1 or mean_gap <= 0:
        raise GraphValidationError("invalid planted-stream parameters")

    rng = np.random.default_rng(seed)
    partners: Dict[int, Deque[int]] = {}
    src = np.empty(num_edges, dtype=np.int64)
    dst = np.empty(num_edges, dtype=np.int64)
    repeats = 0
    for i in range(num_edges):
        s = int(rng.integers(num_nodes))
        recent = partners.get(s)
        if recent and rng.random() < repeat_prob:
            d = recent[int(rng.integers(len(recent)))]
            repeats += 1
        else:
            d = int(rng.integers(num_nodes - 1))
            d += d >= s
        src[i], dst[i] = s, d
        for a, b in ((s, d), (d, s)):
            q = partners.setdefault(a, deque(maxlen=window))
            if b in q:
                q.remove(b)
            q.append(b)

    ts = np.cumsum(rng.exponential(mean_gap, size=num_edges))
    edge_feats = _unit_rows(rng, num_edges, d_e)
    node_feats = _unit_rows(rng, num_nodes, d_n)
    logger.info(
        f"🧪 Planted stream: {num_edges} interactions over {num_nodes} nodes, "
        f"{repeats} repeats"
    )
    return from_arrays(src, dst, ts, edge_feats, node_feats)
