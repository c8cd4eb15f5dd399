#!/usr/bin/env python3
"""
Temporal Graph Store

Load, validate and index timestamped interaction streams.
- Inputs: JODIE-style CSV edge lists (src, dst, timestamp, label, features)
- Outputs: immutable TemporalGraph with time-sorted bi-directed and directed
  adjacency, chronological splits, dataset statistics, binary snapshots
- Features: tie-aware split boundaries, inductive node sets, feature rescaling
"""

import hashlib
import logging
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, Iterator, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

SNAPSHOT_MAGIC = b"STGL1"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<5sHQQQQ??")
DEFAULT_RATIOS = (0.70, 0.15, 0.15)

PathLike = Union[str, Path]


class StglError(Exception):
    """Base class for every error raised by the stgl library."""


class GraphValidationError(StglError, ValueError):
    """Invalid graph content: ids, features, dimensions or ratios."""


class IngestError(StglError, ValueError):
    """Malformed CSV input, with the 1-based file line that failed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SplitError(StglError, ValueError):
    """The graph cannot be split chronologically."""


@dataclass(frozen=True)
class Interaction:
    """One timestamped interaction between two nodes."""

    src: int
    dst: int
    timestamp: float
    edge_feat: np.ndarray
    label: Optional[int] = None


@dataclass(frozen=True)
class Adjacency:
    """CSR adjacency sorted by (owner, timestamp, interaction index)."""

    indptr: np.ndarray
    nbr: np.ndarray
    ts: np.ndarray
    eidx: np.ndarray

    @property
    def num_entries(self) -> int:
        return int(self.nbr.shape[0])


def _build_adjacency(
    owners: np.ndarray,
    nbrs: np.ndarray,
    ts: np.ndarray,
    eidx: np.ndarray,
    num_nodes: int,
) -> Adjacency:
    order = np.lexsort((eidx, ts, owners))
    counts = np.bincount(owners, minlength=num_nodes) if num_nodes else np.zeros(0)
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(counts)
    return Adjacency(
        indptr=indptr,
        nbr=nbrs[order].astype(np.int64),
        ts=ts[order].astype(np.float64),
        eidx=eidx[order].astype(np.int64),
    )


@dataclass(frozen=True, eq=False)
class TemporalGraph:
    """
    Immutable interaction store.

    Interactions are kept as parallel arrays sorted by (timestamp, file order).
    Both adjacency views are built on construction: the bi-directed one lists
    each interaction under both endpoints, the directed one only under its
    source.
    """

    src: np.ndarray
    dst: np.ndarray
    ts: np.ndarray
    edge_feats: np.ndarray
    node_feats: np.ndarray
    labels: Optional[np.ndarray] = None
    resorted: bool = False
    bidirected: Adjacency = field(init=False, repr=False)
    directed: Adjacency = field(init=False, repr=False)

    def __post_init__(self):
        num_edges = self.src.shape[0]
        if not (self.dst.shape[0] == num_edges == self.ts.shape[0]):
            raise GraphValidationError("src, dst and timestamp lengths differ")
        if self.edge_feats.shape[0] != num_edges:
            raise GraphValidationError(
                f"edge feature rows ({self.edge_feats.shape[0]}) != edges ({num_edges})"
            )
        if num_edges and (self.src.min() < 0 or self.dst.min() < 0):
            raise GraphValidationError("negative node id")
        if num_edges and self.node_feats.shape[0] <= max(self.src.max(), self.dst.max()):
            raise GraphValidationError("node feature matrix has fewer rows than nodes")
        if num_edges and np.any(np.diff(self.ts) < 0):
            raise GraphValidationError("interactions must be sorted by timestamp")

        eidx = np.arange(num_edges, dtype=np.int64)
        n = self.num_nodes
        bi = _build_adjacency(
            np.concatenate([self.src, self.dst]),
            np.concatenate([self.dst, self.src]),
            np.concatenate([self.ts, self.ts]),
            np.concatenate([eidx, eidx]),
            n,
        )
        di = _build_adjacency(self.src, self.dst, self.ts, eidx, n)
        object.__setattr__(self, "bidirected", bi)
        object.__setattr__(self, "directed", di)

    @property
    def num_nodes(self) -> int:
        return int(self.node_feats.shape[0])

    @property
    def num_edges(self) -> int:
        return int(self.src.shape[0])

    @property
    def d_e(self) -> int:
        return int(self.edge_feats.shape[1])

    @property
    def d_n(self) -> int:
        return int(self.node_feats.shape[1])

    def interaction(self, i: int) -> Interaction:
        label = None if self.labels is None else int(self.labels[i])
        return Interaction(
            src=int(self.src[i]),
            dst=int(self.dst[i]),
            timestamp=float(self.ts[i]),
            edge_feat=self.edge_feats[i],
            label=label,
        )

    @property
    def interactions(self) -> Iterator[Interaction]:
        return (self.interaction(i) for i in range(self.num_edges))

    def csr(self, directed: bool = False) -> Adjacency:
        return self.directed if directed else self.bidirected

    def check_node(self, v: int):
        if v < 0 or v >= self.num_nodes:
            raise GraphValidationError(f"unknown node {v} (graph has {self.num_nodes})")

    def adjacency(
        self, v: int, directed: bool = False
    ) -> List[Tuple[int, float, int]]:
        """Return (neighbor, timestamp, interaction index) entries of node v."""
        self.check_node(v)
        adj = self.csr(directed)
        lo, hi = adj.indptr[v], adj.indptr[v + 1]
        return [
            (int(n), float(t), int(e))
            for n, t, e in zip(adj.nbr[lo:hi], adj.ts[lo:hi], adj.eidx[lo:hi])
        ]

    def count_before(
        self, nodes: np.ndarray, times: np.ndarray, directed: bool = False
    ) -> np.ndarray:
        """
        Vectorised binary search over each node's adjacency segment.

        Args:
            nodes: node ids, shape (B,)
            times: query times, shape (B,)
            directed: search the directed view instead of the bi-directed one

        Returns:
            Absolute CSR positions one past the last entry with timestamp < time.
        """
        adj = self.csr(directed)
        nodes = np.asarray(nodes, dtype=np.int64)
        times = np.asarray(times, dtype=np.float64)
        lo = adj.indptr[nodes].copy()
        hi = adj.indptr[nodes + 1].copy()
        if adj.num_entries == 0:
            return lo
        last = adj.num_entries - 1
        active = lo < hi
        while np.any(active):
            mid = (lo + hi) // 2
            before = adj.ts[np.minimum(mid, last)] < times
            lo = np.where(active & before, mid + 1, lo)
            hi = np.where(active & ~before, mid, hi)
            active = lo < hi
        return lo

    def dataset_hash(self) -> str:
        digest = hashlib.sha256()
        for arr in (self.src, self.dst, self.ts, self.edge_feats, self.node_feats):
            digest.update(np.ascontiguousarray(arr).tobytes())
        if self.labels is not None:
            digest.update(np.ascontiguousarray(self.labels).tobytes())
        return digest.hexdigest()

    def equals(self, other: "TemporalGraph") -> bool:
        """Structural equality on interactions, features and labels."""
        if (self.labels is None) != (other.labels is None):
            return False
        same = (
            np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.ts, other.ts)
            and self.edge_feats.shape == other.edge_feats.shape
            and np.array_equal(self.edge_feats, other.edge_feats)
            and self.node_feats.shape == other.node_feats.shape
            and np.array_equal(self.node_feats, other.node_feats)
        )
        if same and self.labels is not None:
            same = np.array_equal(self.labels, other.labels)
        return bool(same)


def empty_graph(d_e: int = 0, d_n: int = 0) -> TemporalGraph:
    return TemporalGraph(
        src=np.zeros(0, dtype=np.int64),
        dst=np.zeros(0, dtype=np.int64),
        ts=np.zeros(0, dtype=np.float64),
        edge_feats=np.zeros((0, d_e)),
        node_feats=np.zeros((0, d_n)),
    )


def from_arrays(
    src,
    dst,
    ts,
    edge_feats: Optional[np.ndarray] = None,
    node_feats: Optional[np.ndarray] = None,
    labels=None,
) -> TemporalGraph:
    """
    Build a graph from raw columns, re-sorting by timestamp if needed.

    Args:
        src, dst: node ids (integers >= 0)
        ts: finite timestamps
        edge_feats: (E, d_e) matrix, default zero-dimensional
        node_feats: (V, d_n) matrix, default zero-dimensional
        labels: optional per-interaction binary tags

    Returns:
        TemporalGraph with resorted=True when the input was not time-ordered.
    """
    src = np.asarray(src, dtype=np.int64).reshape(-1)
    dst = np.asarray(dst, dtype=np.int64).reshape(-1)
    ts = np.asarray(ts, dtype=np.float64).reshape(-1)
    num_edges = src.shape[0]
    if not np.all(np.isfinite(ts)):
        raise GraphValidationError("timestamps must be finite")
    if num_edges and (src.min() < 0 or dst.min() < 0):
        raise GraphValidationError("negative node id")

    if edge_feats is None:
        edge_feats = np.zeros((num_edges, 0))
    edge_feats = np.asarray(edge_feats, dtype=np.float64).reshape(num_edges, -1)

    num_nodes = int(max(src.max(), dst.max()) + 1) if num_edges else 0
    if node_feats is None:
        node_feats = np.zeros((num_nodes, 0))
    node_feats = np.asarray(node_feats, dtype=np.float64)
    if node_feats.ndim != 2:
        raise GraphValidationError("node features must be a matrix")
    if node_feats.shape[0] < num_nodes:
        pad = np.zeros((num_nodes - node_feats.shape[0], node_feats.shape[1]))
        node_feats = np.vstack([node_feats, pad])

    if labels is not None:
        labels = np.asarray(labels, dtype=np.int8).reshape(-1)

    resorted = bool(num_edges and np.any(np.diff(ts) < 0))
    if resorted:
        order = np.argsort(ts, kind="stable")
        src, dst, ts, edge_feats = src[order], dst[order], ts[order], edge_feats[order]
        if labels is not None:
            labels = labels[order]
        logger.warning("⚠️  Timestamps were not monotone; interactions re-sorted")

    return TemporalGraph(
        src=src,
        dst=dst,
        ts=ts,
        edge_feats=edge_feats,
        node_feats=node_feats,
        labels=labels,
        resorted=resorted,
    )


@dataclass(frozen=True)
class CsvSchema:
    """
    Column mapping for interaction CSV files.

    positional=True ignores header names and reads src, dst, timestamp, label,
    features by position (public JODIE layout). bipartite=True offsets
    destination ids by max(src)+1 so the two node sides share one id space.
    """

    src: str = "src"
    dst: str = "dst"
    timestamp: str = "timestamp"
    label: Optional[str] = "label"
    feature_prefix: str = "f"
    positional: bool = False
    bipartite: bool = False

    @classmethod
    def jodie(cls) -> "CsvSchema":
        return cls(positional=True, bipartite=True)


def _numeric_column(frame: pd.DataFrame, column, what: str) -> np.ndarray:
    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(values)
    if np.any(bad):
        row = int(np.flatnonzero(bad)[0])
        raw = frame[column].iloc[row]
        # header is line 1, first data row is line 2
        raise IngestError(f"non-numeric {what} value {raw!r}", line=row + 2)
    return values


def _integer_ids(values: np.ndarray, what: str) -> np.ndarray:
    if np.any(values != np.floor(values)):
        row = int(np.flatnonzero(values != np.floor(values))[0])
        raise IngestError(f"{what} id {values[row]} is not an integer", line=row + 2)
    if np.any(values < 0):
        row = int(np.flatnonzero(values < 0)[0])
        raise GraphValidationError(f"negative {what} id {int(values[row])} at line {row + 2}")
    return values.astype(np.int64)


def _read_frame(path: Path, schema: CsvSchema) -> pd.DataFrame:
    try:
        if schema.positional:
            return pd.read_csv(
                path, header=None, skiprows=1, float_precision="round_trip"
            )
        return pd.read_csv(path, skipinitialspace=True, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        if schema.positional:
            return pd.DataFrame()
        raise IngestError("file has no header row", line=1)
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        line = int(match.group(1)) if match else None
        raise IngestError(f"malformed row ({e})", line=line) from e


def _feature_columns(frame: pd.DataFrame, prefix: str) -> List[str]:
    pattern = re.compile(rf"^{re.escape(prefix)}(\d+)$")
    found = []
    for column in frame.columns:
        match = pattern.match(str(column))
        if match:
            found.append((int(match.group(1)), column))
    return [column for _, column in sorted(found)]


def read_node_features(path: PathLike, num_nodes: int) -> np.ndarray:
    """Read a `node_id,f0..fk` side file into a zero-padded matrix."""
    frame = pd.read_csv(path, skipinitialspace=True, float_precision="round_trip")
    if "node_id" not in frame.columns:
        raise GraphValidationError(f"{path}: missing node_id column")
    ids = _integer_ids(_numeric_column(frame, "node_id", "node"), "node")
    columns = _feature_columns(frame, "f")
    rows = max(num_nodes, int(ids.max()) + 1 if ids.size else 0)
    feats = np.zeros((rows, len(columns)))
    if ids.size:
        values = np.column_stack(
            [_numeric_column(frame, c, f"feature {c}") for c in columns]
        ) if columns else np.zeros((ids.size, 0))
        feats[ids] = values
    return feats


def ingest_csv(
    path: PathLike,
    schema: Optional[CsvSchema] = None,
    node_feats_path: Optional[PathLike] = None,
) -> TemporalGraph:
    """
    Load an interaction CSV into a TemporalGraph.

    Args:
        path: CSV with a header row and columns src,dst,timestamp[,label][,f0..fk]
        schema: column mapping (default: named columns as above)
        node_feats_path: optional `node_feats.csv` side file

    Returns:
        TemporalGraph sorted by timestamp (stable on ties)
    """
    schema = schema or CsvSchema()
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Interaction file not found: {path}")

    frame = _read_frame(path, schema)
    if schema.positional:
        if frame.shape[1] == 0:
            src_col = dst_col = ts_col = None
        elif frame.shape[1] < 3:
            raise IngestError("expected at least 3 positional columns", line=2)
        else:
            src_col, dst_col, ts_col = 0, 1, 2
        label_col = 3 if frame.shape[1] > 3 else None
        feat_cols = list(frame.columns[4:])
    else:
        missing = [
            c for c in (schema.src, schema.dst, schema.timestamp) if c not in frame.columns
        ]
        if missing:
            raise GraphValidationError(f"{path}: missing required columns {missing}")
        src_col, dst_col, ts_col = schema.src, schema.dst, schema.timestamp
        label_col = schema.label if schema.label in frame.columns else None
        feat_cols = _feature_columns(frame, schema.feature_prefix)

    if src_col is None or len(frame) == 0:
        logger.info(f"📁 {path.name}: no interactions")
        return empty_graph(d_e=len(feat_cols))

    src = _integer_ids(_numeric_column(frame, src_col, "src"), "src")
    dst = _integer_ids(_numeric_column(frame, dst_col, "dst"), "dst")
    ts = _numeric_column(frame, ts_col, "timestamp")
    labels = None
    if label_col is not None:
        labels = _numeric_column(frame, label_col, "label").astype(np.int8)
    if feat_cols:
        edge_feats = np.column_stack(
            [_numeric_column(frame, c, f"feature {c}") for c in feat_cols]
        )
    else:
        edge_feats = np.zeros((len(frame), 0))

    if schema.bipartite:
        dst = dst + int(src.max()) + 1

    num_nodes = int(max(src.max(), dst.max()) + 1)
    node_feats = None
    if node_feats_path is not None:
        node_feats = read_node_features(node_feats_path, num_nodes)

    graph = from_arrays(src, dst, ts, edge_feats, node_feats, labels)
    logger.info(
        f"📁 Ingested {path.name}: {graph.num_nodes:,} nodes, {graph.num_edges:,} edges"
    )
    return graph


def normalize_features(g: TemporalGraph) -> TemporalGraph:
    """Rescale every node/edge feature vector with l2 norm > 1 to unit norm."""

    def _rescale(matrix: np.ndarray, what: str) -> np.ndarray:
        if not np.all(np.isfinite(matrix)):
            raise GraphValidationError(f"non-finite {what} feature value")
        out = matrix.astype(np.float64, copy=True)
        if out.size == 0:
            return out
        norms = np.linalg.norm(out, axis=1)
        big = norms > 1.0
        out[big] /= norms[big, None]
        return out

    return TemporalGraph(
        src=g.src,
        dst=g.dst,
        ts=g.ts,
        edge_feats=_rescale(g.edge_feats, "edge"),
        node_feats=_rescale(g.node_feats, "node"),
        labels=g.labels,
        resorted=g.resorted,
    )


@dataclass(frozen=True)
class SplitSpec:
    """Index-based chronological split with its inductive node set."""

    train_end_idx: int
    val_end_idx: int
    num_edges: int
    inductive_nodes: FrozenSet[int]
    ratios: Tuple[float, float, float] = DEFAULT_RATIOS
    warnings: Tuple[str, ...] = ()

    @property
    def train_range(self) -> Tuple[int, int]:
        return 0, self.train_end_idx

    @property
    def val_range(self) -> Tuple[int, int]:
        return self.train_end_idx, self.val_end_idx

    @property
    def test_range(self) -> Tuple[int, int]:
        return self.val_end_idx, self.num_edges

    def inductive_array(self) -> np.ndarray:
        return np.array(sorted(self.inductive_nodes), dtype=np.int64)


def _past_ties(ts: np.ndarray, boundary: int) -> int:
    if 0 < boundary < ts.shape[0] and ts[boundary] == ts[boundary - 1]:
        return int(np.searchsorted(ts, ts[boundary - 1], side="right"))
    return boundary


def chronological_split(
    g: TemporalGraph, ratios: Tuple[float, float, float] = DEFAULT_RATIOS
) -> SplitSpec:
    """
    Split interactions into train/validation/test by index.

    Boundaries sit at floor(r0*|E|) and floor((r0+r1)*|E|) and move forward
    until no timestamp straddles them.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1) > 1e-9:
        raise GraphValidationError(f"split ratios must be 3 positive values summing to 1: {ratios}")
    num_edges = g.num_edges
    if num_edges < 3:
        raise SplitError(f"cannot split {num_edges} interactions into three parts")

    raw_train = max(1, int(np.floor(ratios[0] * num_edges + 1e-9)))
    raw_val = int(np.floor((ratios[0] + ratios[1]) * num_edges + 1e-9))
    train_end = _past_ties(g.ts, raw_train)
    val_end = _past_ties(g.ts, max(raw_val, train_end))

    warnings = []
    if (train_end, val_end) != (raw_train, raw_val):
        warnings.append(
            f"boundaries moved from ({raw_train}, {raw_val}) to ({train_end}, {val_end}) "
            "to keep tied timestamps together"
        )
    if val_end == train_end or val_end == num_edges:
        warnings.append("validation or test split is empty")
    for message in warnings:
        logger.warning(f"⚠️  {message}")

    seen = np.union1d(g.src[:train_end], g.dst[:train_end])
    everyone = np.union1d(g.src, g.dst)
    inductive = frozenset(int(v) for v in np.setdiff1d(everyone, seen))

    return SplitSpec(
        train_end_idx=train_end,
        val_end_idx=val_end,
        num_edges=num_edges,
        inductive_nodes=inductive,
        ratios=ratios,
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class GraphStats:
    num_nodes: int
    num_edges: int
    avg_time_gap: float
    d_n: int
    d_e: int
    has_node_feats: bool
    has_edge_feats: bool

    def to_dict(self) -> dict:
        return {
            "num_nodes": self.num_nodes,
            "num_edges": self.num_edges,
            "avg_time_gap": self.avg_time_gap,
            "d_n": self.d_n,
            "d_e": self.d_e,
            "has_node_feats": self.has_node_feats,
            "has_edge_feats": self.has_edge_feats,
        }


def graph_stats(g: TemporalGraph) -> GraphStats:
    """Dataset statistics; avg_time_gap averages each node's mean gap."""
    adj = g.bidirected
    avg_gap = 0.0
    if adj.num_entries > 1:
        owner = np.repeat(np.arange(g.num_nodes), np.diff(adj.indptr))
        gaps = np.diff(adj.ts)
        same = owner[1:] == owner[:-1]
        counts = np.bincount(owner[1:][same], minlength=g.num_nodes)
        totals = np.bincount(owner[1:][same], weights=gaps[same], minlength=g.num_nodes)
        has_gap = counts > 0
        if np.any(has_gap):
            avg_gap = float(np.mean(totals[has_gap] / counts[has_gap]))
    return GraphStats(
        num_nodes=g.num_nodes,
        num_edges=g.num_edges,
        avg_time_gap=avg_gap,
        d_n=g.d_n,
        d_e=g.d_e,
        has_node_feats=g.d_n > 0,
        has_edge_feats=g.d_e > 0,
    )


def save_snapshot(g: TemporalGraph, path: PathLike) -> Path:
    """Write the versioned little-endian binary snapshot."""
    path = Path(path)
    has_labels = g.labels is not None
    header = _HEADER.pack(
        SNAPSHOT_MAGIC,
        SNAPSHOT_VERSION,
        g.num_nodes,
        g.num_edges,
        g.d_e,
        g.d_n,
        has_labels,
        g.resorted,
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(g.src.astype("<i8").tobytes())
        f.write(g.dst.astype("<i8").tobytes())
        f.write(g.ts.astype("<f8").tobytes())
        if has_labels:
            f.write(g.labels.astype("<i1").tobytes())
        f.write(g.edge_feats.astype("<f8").tobytes())
        f.write(g.node_feats.astype("<f8").tobytes())
    logger.debug(f"Wrote snapshot {path} ({g.num_edges} edges)")
    return path


def load_snapshot(path: PathLike) -> TemporalGraph:
    """Read a snapshot written by save_snapshot; adjacency is rebuilt."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise GraphValidationError(f"{path}: truncated snapshot header")
    magic, version, n, e, d_e, d_n, has_labels, resorted = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise GraphValidationError(f"{path}: not an STGL1 snapshot")
    if version != SNAPSHOT_VERSION:
        raise GraphValidationError(f"{path}: unsupported snapshot version {version}")

    offset = _HEADER.size

    def take(dtype: str, count: int) -> np.ndarray:
        nonlocal offset
        width = np.dtype(dtype).itemsize
        if count == 0:
            return np.zeros(0, dtype=dtype[1:])
        if offset + width * count > len(data):
            raise GraphValidationError(f"{path}: truncated snapshot body")
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
        offset += width * count
        return arr.astype(dtype[1:])

    src = take("<i8", e)
    dst = take("<i8", e)
    ts = take("<f8", e)
    labels = take("<i1", e) if has_labels else None
    edge_feats = take("<f8", e * d_e).reshape(e, d_e)
    node_feats = take("<f8", n * d_n).reshape(n, d_n)
    return TemporalGraph(
        src=src,
        dst=dst,
        ts=ts,
        edge_feats=edge_feats,
        node_feats=node_feats,
        labels=labels,
        resorted=bool(resorted),
    )


def to_csv(
    g: TemporalGraph, path: PathLike, node_feats_path: Optional[PathLike] = None
) -> Path:
    """Write the graph back out in the ingest CSV layout."""
    path = Path(path)
    frame = pd.DataFrame({"src": g.src, "dst": g.dst, "timestamp": g.ts})
    if g.labels is not None:
        frame["label"] = g.labels.astype(np.int64)
    for k in range(g.d_e):
        frame[f"f{k}"] = g.edge_feats[:, k]
    frame.to_csv(path, index=False)
    if node_feats_path is not None and g.d_n > 0:
        nodes = pd.DataFrame(
            g.node_feats, columns=[f"f{k}" for k in range(g.d_n)]
        )
        nodes.insert(0, "node_id", np.arange(g.num_nodes))
        nodes.to_csv(node_feats_path, index=False)
    return path
