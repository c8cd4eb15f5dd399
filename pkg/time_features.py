"""
Time encoding and event feature assembly.

An event feature is u = [e ‖ ψ(t − t′) ‖ x_i ‖ x_j]; empty segments are
skipped, so featureless datasets use the time encoding alone.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from neighbor_sampling import NeighborBatch, TemporalNeighborhood
from temporal_graph import StglError, TemporalGraph

DEFAULT_TIME_DIM = 100


class ModelError(StglError, ValueError):
    """Invalid model input, dimensions or parameter layout."""


class TimeEncoder:
    """
    Fixed cosine time encoding ψ(Δt) = cos(Δt · w).

    w_i = α^(−(i−1)/β) with α = β = √d_t, so w_1 = 1 and the frequencies
    decrease geometrically. w is never trained.
    """

    def __init__(self, d_t: int = DEFAULT_TIME_DIM):
        if d_t < 1:
            raise ModelError(f"time dimension must be >= 1, got {d_t}")
        self.d_t = int(d_t)
        base = np.sqrt(self.d_t)
        self.w = base ** (-np.arange(self.d_t, dtype=np.float64) / base)

    def __call__(self, dt) -> np.ndarray:
        dt = np.asarray(dt, dtype=np.float64)
        if np.any(dt < 0):
            raise ModelError("negative time delta: event lies in the future")
        return np.cos(dt[..., None] * self.w)

    def __repr__(self) -> str:
        return f"TimeEncoder(d_t={self.d_t})"


def time_encode(enc: TimeEncoder, dt: float) -> np.ndarray:
    return enc(dt)


@dataclass(frozen=True)
class FeatureLayout:
    """Segment sizes of an event feature vector."""

    d_e: int
    d_t: int
    d_n: int

    @classmethod
    def for_graph(cls, g: TemporalGraph, enc: TimeEncoder) -> "FeatureLayout":
        return cls(d_e=g.d_e, d_t=enc.d_t, d_n=g.d_n)

    @property
    def d_in(self) -> int:
        return self.d_e + self.d_t + 2 * self.d_n

    def segments(self) -> Dict[str, slice]:
        """Non-empty segments in layout order."""
        out = {}
        start = 0
        for name, size in (
            ("edge", self.d_e),
            ("time", self.d_t),
            ("root", self.d_n),
            ("neighbor", self.d_n),
        ):
            if size:
                out[name] = slice(start, start + size)
                start += size
        return out


def _check_layout(g: TemporalGraph, enc: TimeEncoder, layout: Optional[FeatureLayout]):
    expected = FeatureLayout.for_graph(g, enc)
    if layout is not None and layout != expected:
        raise ModelError(f"feature layout {layout} does not match graph {expected}")
    return expected


def build_event_features(
    g: TemporalGraph,
    root: int,
    nbr: TemporalNeighborhood,
    t: float,
    enc: TimeEncoder,
    layout: Optional[FeatureLayout] = None,
) -> List[np.ndarray]:
    """
    The ordered feature set of a neighborhood, one vector per entry.

    Args:
        g: graph holding edge and node features
        root: node whose neighborhood this is
        nbr: neighborhood sampled at time t
        t: query time
        enc: time encoder
        layout: expected layout; a mismatch with the graph raises ModelError

    Returns:
        List of d_in vectors in the neighborhood's descending order.
    """
    _check_layout(g, enc, layout)
    if nbr.query_time != t:
        raise ModelError(f"neighborhood sampled at {nbr.query_time}, features built at {t}")
    if nbr.root != root:
        raise ModelError(f"neighborhood belongs to node {nbr.root}, not {root}")
    if len(nbr) == 0:
        return []
    psi = enc(t - nbr.ts)
    x_root = np.broadcast_to(g.node_feats[root], (len(nbr), g.d_n))
    u = np.concatenate(
        [g.edge_feats[nbr.eidx], psi, x_root, g.node_feats[nbr.nbr]], axis=1
    )
    return list(u)


def batch_event_features(
    g: TemporalGraph, nb: NeighborBatch, enc: TimeEncoder
) -> np.ndarray:
    """
    Event features for a padded neighbor batch.

    Returns:
        (B, K, d_in) array with zero rows where the mask is False.
    """
    batch, k = nb.nbr.shape
    if batch == 0:
        return np.zeros((0, k, FeatureLayout.for_graph(g, enc).d_in))
    dt = np.where(nb.mask, nb.query_ts[:, None] - nb.ts, 0.0)
    psi = enc(np.maximum(dt, 0.0))
    safe_e = np.where(nb.mask, nb.eidx, 0)
    edge = g.edge_feats[safe_e] if g.num_edges else np.zeros((batch, k, g.d_e))
    x_root = np.broadcast_to(g.node_feats[nb.roots][:, None, :], (batch, k, g.d_n))
    x_nbr = g.node_feats[nb.nbr]
    u = np.concatenate([edge, psi, x_root, x_nbr], axis=2)
    return u * nb.mask[:, :, None]


def self_features(g: TemporalGraph, nodes: np.ndarray, enc: TimeEncoder) -> np.ndarray:
    """
    Input feature of a tree root: [0 ‖ ψ(0) ‖ x_v ‖ x_v].

    Returns:
        (B, d_in) array.
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    batch = nodes.shape[0]
    x = g.node_feats[nodes]
    return np.concatenate(
        [np.zeros((batch, g.d_e)), np.ones((batch, enc.d_t)), x, x], axis=1
    )
