"""
Temporal neighbor sampling.

Every query is strict-before: an interaction at exactly the query time is
never returned. Entries come back in descending (timestamp, interaction index)
order, and each interaction counts as its own neighbor.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from temporal_graph import Adjacency, StglError, TemporalGraph

logger = logging.getLogger(__name__)

RECENT = "recent"
UNIFORM = "uniform"
BIDIRECTED = "bidirected"
DIRECTED = "directed"

_DIRECTION_ALIASES = {"bi": BIDIRECTED, BIDIRECTED: BIDIRECTED, "di": DIRECTED, DIRECTED: DIRECTED}


class SamplingError(StglError, ValueError):
    """Invalid neighbor query or no eligible node to draw."""


def resolve_direction(directionality: str) -> str:
    try:
        return _DIRECTION_ALIASES[directionality]
    except KeyError:
        raise SamplingError(f"unknown graph direction {directionality!r}") from None


def resolve_mode(mode: str) -> str:
    if mode not in (RECENT, UNIFORM):
        raise SamplingError(f"unknown sampling mode {mode!r}")
    return mode


@dataclass(frozen=True)
class TemporalNeighborhood:
    """The ordered neighbor set of `root` strictly before `query_time`."""

    root: int
    query_time: float
    nbr: np.ndarray
    ts: np.ndarray
    eidx: np.ndarray
    mode: str = RECENT
    directionality: str = BIDIRECTED

    def __len__(self) -> int:
        return int(self.nbr.shape[0])

    @property
    def entries(self) -> List[Tuple[int, float, int]]:
        return [
            (int(n), float(t), int(e)) for n, t, e in zip(self.nbr, self.ts, self.eidx)
        ]

    def pairs(self) -> List[Tuple[int, float]]:
        return [(int(n), float(t)) for n, t in zip(self.nbr, self.ts)]


@dataclass(frozen=True)
class LayeredNeighborhood:
    """
    Temporal tree rooted at `root`.

    hops[0] holds the root's neighborhood; hops[h] holds one neighborhood per
    entry of hops[h-1] (in order), each queried at that entry's timestamp.
    """

    root: int
    query_time: float
    hops: Tuple[Tuple[TemporalNeighborhood, ...], ...]

    @property
    def depth(self) -> int:
        return len(self.hops)


def _check_query(g: TemporalGraph, v: int, k: int):
    if k < 1:
        raise SamplingError(f"K must be >= 1, got {k}")
    if v < 0 or v >= g.num_nodes:
        raise SamplingError(f"unknown node {v} (graph has {g.num_nodes})")


def _history_bounds(adj: Adjacency, v: int, t: float) -> Tuple[int, int]:
    lo, hi = int(adj.indptr[v]), int(adj.indptr[v + 1])
    pos = lo + int(np.searchsorted(adj.ts[lo:hi], t, side="left"))
    return lo, pos


def _neighborhood(
    adj: Adjacency, v: int, t: float, positions: np.ndarray, mode: str, direction: str
) -> TemporalNeighborhood:
    return TemporalNeighborhood(
        root=int(v),
        query_time=float(t),
        nbr=adj.nbr[positions],
        ts=adj.ts[positions],
        eidx=adj.eidx[positions],
        mode=mode,
        directionality=direction,
    )


def recent_neighbors(
    g: TemporalGraph, v: int, t: float, k: int, directionality: str = BIDIRECTED
) -> TemporalNeighborhood:
    """The K most recent interactions of v strictly before t."""
    _check_query(g, v, k)
    direction = resolve_direction(directionality)
    adj = g.csr(direction == DIRECTED)
    lo, pos = _history_bounds(adj, v, t)
    positions = np.arange(pos - 1, max(lo, pos - k) - 1, -1, dtype=np.int64)
    return _neighborhood(adj, v, t, positions, RECENT, direction)


def uniform_neighbors(
    g: TemporalGraph,
    v: int,
    t: float,
    k: int,
    rng: np.random.Generator,
    directionality: str = BIDIRECTED,
) -> TemporalNeighborhood:
    """K interactions drawn uniformly without replacement from v's history."""
    _check_query(g, v, k)
    direction = resolve_direction(directionality)
    adj = g.csr(direction == DIRECTED)
    lo, pos = _history_bounds(adj, v, t)
    history = pos - lo
    if history <= k:
        positions = np.arange(pos - 1, lo - 1, -1, dtype=np.int64)
    else:
        picked = rng.choice(history, size=k, replace=False)
        positions = lo + np.sort(picked)[::-1]
    return _neighborhood(adj, v, t, positions, UNIFORM, direction)


def sample_layers(
    g: TemporalGraph,
    v: int,
    t: float,
    fanouts: Sequence[int],
    mode: str = RECENT,
    directionality: str = BIDIRECTED,
    rng: Optional[np.random.Generator] = None,
) -> LayeredNeighborhood:
    """
    Temporal tree with one hop per fanout entry.

    Hop h+1 is sampled at each hop-h entry's neighbor, queried at that entry's
    interaction time, so every root-to-leaf path has decreasing timestamps.
    """
    mode = resolve_mode(mode)
    if not fanouts:
        raise SamplingError("at least one fanout is required")
    if mode == UNIFORM and rng is None:
        raise SamplingError("uniform sampling needs a random generator")

    def query(node: int, at: float, k: int) -> TemporalNeighborhood:
        if mode == RECENT:
            return recent_neighbors(g, node, at, k, directionality)
        return uniform_neighbors(g, node, at, k, rng, directionality)

    hops = [(query(v, t, fanouts[0]),)]
    for k in fanouts[1:]:
        layer = []
        for parent in hops[-1]:
            for node, at in zip(parent.nbr, parent.ts):
                layer.append(query(int(node), float(at), k))
        hops.append(tuple(layer))
    return LayeredNeighborhood(root=int(v), query_time=float(t), hops=tuple(hops))


def recent_two_hop(
    g: TemporalGraph,
    v: int,
    t: float,
    k1: int,
    k2: int,
    directionality: str = BIDIRECTED,
) -> LayeredNeighborhood:
    if k1 < 1 or k2 < 1:
        raise SamplingError(f"K1 and K2 must be >= 1, got {k1}, {k2}")
    return sample_layers(g, v, t, (k1, k2), RECENT, directionality)


@dataclass(frozen=True)
class NeighborBatch:
    """
    Padded neighborhoods for a batch of queries, shape (B, K).

    Valid entries are packed at the front of each row in descending
    (timestamp, index) order; padding has mask False, eidx -1 and the query
    time as its timestamp.
    """

    roots: np.ndarray
    query_ts: np.ndarray
    nbr: np.ndarray
    ts: np.ndarray
    eidx: np.ndarray
    mask: np.ndarray

    @property
    def k(self) -> int:
        return int(self.nbr.shape[1])

    def counts(self) -> np.ndarray:
        return self.mask.sum(axis=1)


class NeighborSampler:
    """
    Vectorised neighbor lookups over arrays of (node, time) queries.

    One instance per model; the caller owns the generator used for uniform
    sampling.
    """

    def __init__(
        self,
        g: TemporalGraph,
        mode: str = RECENT,
        directionality: str = BIDIRECTED,
        rng: Optional[np.random.Generator] = None,
    ):
        self.graph = g
        self.mode = resolve_mode(mode)
        self.directionality = resolve_direction(directionality)
        self.rng = rng if rng is not None else np.random.default_rng(0)

    @property
    def adjacency(self) -> Adjacency:
        return self.graph.csr(self.directionality == DIRECTED)

    def sample(self, nodes: np.ndarray, times: np.ndarray, k: int) -> NeighborBatch:
        if k < 1:
            raise SamplingError(f"K must be >= 1, got {k}")
        nodes = np.asarray(nodes, dtype=np.int64)
        times = np.asarray(times, dtype=np.float64)
        if nodes.size and (nodes.min() < 0 or nodes.max() >= self.graph.num_nodes):
            raise SamplingError("query batch references an unknown node")

        adj = self.adjacency
        batch = nodes.shape[0]
        pos = self.graph.count_before(nodes, times, self.directionality == DIRECTED)
        lo = adj.indptr[nodes]
        offsets = pos[:, None] - 1 - np.arange(k)[None, :]
        mask = offsets >= lo[:, None]

        if self.mode == UNIFORM:
            history = pos - lo
            for row in np.flatnonzero(history > k):
                picked = self.rng.choice(history[row], size=k, replace=False)
                offsets[row] = lo[row] + np.sort(picked)[::-1]

        query_ts = np.broadcast_to(times[:, None], (batch, k))
        if adj.num_entries == 0:
            return NeighborBatch(
                roots=nodes,
                query_ts=times,
                nbr=np.zeros((batch, k), dtype=np.int64),
                ts=query_ts.copy(),
                eidx=np.full((batch, k), -1, dtype=np.int64),
                mask=np.zeros((batch, k), dtype=bool),
            )
        safe = np.where(mask, offsets, 0)
        return NeighborBatch(
            roots=nodes,
            query_ts=times,
            nbr=np.where(mask, adj.nbr[safe], 0),
            ts=np.where(mask, adj.ts[safe], query_ts),
            eidx=np.where(mask, adj.eidx[safe], -1),
            mask=mask,
        )

    def sample_tree(
        self, nodes: np.ndarray, times: np.ndarray, fanouts: Sequence[int]
    ) -> List[NeighborBatch]:
        """
        One NeighborBatch per hop.

        Hop h has B * prod(fanouts[:h]) rows; row r of hop h+1 expands entry
        (r // K_h, r % K_h) of hop h. Children of padding entries are masked.
        """
        layers = []
        parent_nodes = np.asarray(nodes, dtype=np.int64)
        parent_ts = np.asarray(times, dtype=np.float64)
        parent_mask = np.ones(parent_nodes.shape[0], dtype=bool)
        for k in fanouts:
            layer = self.sample(parent_nodes, parent_ts, k)
            if not np.all(parent_mask):
                mask = layer.mask & parent_mask[:, None]
                layer = NeighborBatch(
                    roots=layer.roots,
                    query_ts=layer.query_ts,
                    nbr=np.where(mask, layer.nbr, 0),
                    ts=np.where(mask, layer.ts, layer.query_ts[:, None]),
                    eidx=np.where(mask, layer.eidx, -1),
                    mask=mask,
                )
            layers.append(layer)
            parent_nodes = layer.nbr.reshape(-1)
            parent_ts = layer.ts.reshape(-1)
            parent_mask = layer.mask.reshape(-1)
        return layers


def merge_two_hop(hop1: NeighborBatch, hop2: NeighborBatch) -> NeighborBatch:
    """
    Flatten a two-hop tree into one list per root, newest first.

    Capacity is K1 * (1 + K2); hop-2 entries keep the root as their root.
    """
    batch, k1 = hop1.nbr.shape
    k2 = hop2.nbr.shape[1]
    nbr = np.concatenate([hop1.nbr, hop2.nbr.reshape(batch, k1 * k2)], axis=1)
    ts = np.concatenate([hop1.ts, hop2.ts.reshape(batch, k1 * k2)], axis=1)
    eidx = np.concatenate([hop1.eidx, hop2.eidx.reshape(batch, k1 * k2)], axis=1)
    mask = np.concatenate([hop1.mask, hop2.mask.reshape(batch, k1 * k2)], axis=1)
    # valid first, then timestamp descending, then index descending
    order = np.lexsort((-eidx, -ts, (~mask).astype(np.int8)), axis=1)

    def take(a: np.ndarray) -> np.ndarray:
        return np.take_along_axis(a, order, axis=1)

    mask = take(mask)
    ts = np.where(mask, take(ts), hop1.query_ts[:, None])
    return NeighborBatch(
        roots=hop1.roots,
        query_ts=hop1.query_ts,
        nbr=np.where(mask, take(nbr), 0),
        ts=ts,
        eidx=np.where(mask, take(eidx), -1),
        mask=mask,
    )


def negative_pool(g: TemporalGraph, nodes: Optional[Sequence[int]] = None) -> np.ndarray:
    """Sorted candidate set for negatives: destination nodes, or `nodes` if given."""
    if nodes is not None:
        return np.unique(np.asarray(list(nodes), dtype=np.int64))
    return np.unique(g.dst)


def sample_negatives(
    rng: np.random.Generator, pool: np.ndarray, exclude: np.ndarray
) -> np.ndarray:
    """
    One uniform draw from `pool` per entry of `exclude`, never equal to it.

    Draws r in [0, n-1) and shifts past the excluded position, so each
    eligible node has probability 1/(n-1).
    """
    pool = np.asarray(pool, dtype=np.int64)
    exclude = np.asarray(exclude, dtype=np.int64).reshape(-1)
    n = pool.shape[0]
    if n == 0:
        raise SamplingError("negative pool is empty")
    pos = np.searchsorted(pool, exclude)
    in_pool = (pos < n) & (pool[np.minimum(pos, n - 1)] == exclude)
    if n == 1 and np.any(in_pool):
        raise SamplingError("no eligible negative: the pool only holds the true destination")
    high = np.where(in_pool, n - 1, n)
    r = (rng.random(exclude.shape[0]) * high).astype(np.int64)
    r = np.minimum(r, high - 1)
    r = r + (in_pool & (r >= pos))
    return pool[r]


def sample_negative(
    rng: np.random.Generator,
    g: TemporalGraph,
    src: int,
    exclude: int,
    pool: Optional[np.ndarray] = None,
) -> int:
    """
    A uniform destination node different from the true one.

    Pass the inductive node set as `pool` for inductive evaluation.
    """
    if g.num_nodes < 2:
        raise SamplingError("negative sampling needs at least 2 nodes")
    g.check_node(src)
    pool = negative_pool(g) if pool is None else np.unique(pool)
    return int(sample_negatives(rng, pool, np.array([exclude]))[0])
