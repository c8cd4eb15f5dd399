"""
Temporal graph model families with hand-derived gradients.

Encoders map (node, time) queries to embeddings; a TemporalModel puts a head
on top: the link classifier for link prediction, or a scalar readout for the
node-level theory setting.

Flattening order of the trainable vector: encoder blocks in the order their
param_specs list them (SToNe: alpha, W1, W2; GNN: W1..W_{L-1}; RNN: W1, W2;
memory: W1, W2, W3), then the head (link: V1, b1, V2, b2; node: w). Matrices
are row-major.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from neighbor_sampling import (
    BIDIRECTED,
    RECENT,
    NeighborSampler,
    merge_two_hop,
    resolve_direction,
    resolve_mode,
)
from nn_layers import (
    LinkClassifier,
    ModelParams,
    NodeReadout,
    ParamSpec,
    get_activation,
    layer_norm,
    layer_norm_backward,
    param_init,
    weight_grad,
)
from temporal_graph import TemporalGraph
from time_features import (
    DEFAULT_TIME_DIM,
    FeatureLayout,
    ModelError,
    TimeEncoder,
    batch_event_features,
    self_features,
)

logger = logging.getLogger(__name__)

RNN_KAPPA = 1.0 / np.sqrt(2.0)
METHODS = ("stone", "gnn", "rnn", "memory")
DEFAULT_ACTIVATION = {"stone": "relu", "gnn": "relu", "rnn": "tanh", "memory": "tanh"}


@dataclass(frozen=True)
class QueryBatch:
    """
    Link or node queries at given times.

    dst is None for node-level (readout) models.
    """

    src: np.ndarray
    ts: np.ndarray
    dst: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "src", np.asarray(self.src, dtype=np.int64).reshape(-1))
        object.__setattr__(self, "ts", np.asarray(self.ts, dtype=np.float64).reshape(-1))
        if self.dst is not None:
            object.__setattr__(
                self, "dst", np.asarray(self.dst, dtype=np.int64).reshape(-1)
            )
            if self.dst.shape != self.src.shape:
                raise ModelError("src and dst batches differ in length")
        if self.ts.shape != self.src.shape:
            raise ModelError("src and timestamp batches differ in length")

    def __len__(self) -> int:
        return int(self.src.shape[0])

    def subset(self, index) -> "QueryBatch":
        return QueryBatch(
            self.src[index],
            self.ts[index],
            None if self.dst is None else self.dst[index],
        )

    @staticmethod
    def concat(parts: Sequence["QueryBatch"]) -> "QueryBatch":
        dst = None
        if parts and parts[0].dst is not None:
            dst = np.concatenate([p.dst for p in parts])
        return QueryBatch(
            np.concatenate([p.src for p in parts]),
            np.concatenate([p.ts for p in parts]),
            dst,
        )


def group_rows(grad: np.ndarray, groups: int) -> np.ndarray:
    """Sum per-row gradients that belong to the same root (rows are root-major)."""
    return grad.reshape(groups, -1, *grad.shape[1:]).sum(axis=1)


def grouped_weight_grad(
    dy: np.ndarray, x: np.ndarray, groups: int, per_example: bool
) -> np.ndarray:
    if not per_example:
        return dy.T @ x
    return np.einsum(
        "bri,brj->bij",
        dy.reshape(groups, -1, dy.shape[-1]),
        x.reshape(groups, -1, x.shape[-1]),
    )


class Encoder:
    """Base encoder: stateless unless it overrides reset_state/observe."""

    prefix = "enc"
    d_out = 0
    stateful = False

    def param_specs(self) -> List[ParamSpec]:
        raise NotImplementedError

    def encode(
        self, params: ModelParams, nodes: np.ndarray, times: np.ndarray
    ) -> Tuple[np.ndarray, dict]:
        raise NotImplementedError

    def backward(
        self, params: ModelParams, cache: dict, dh: np.ndarray, per_example: bool
    ) -> Dict[str, np.ndarray]:
        raise NotImplementedError

    def reset_state(self, params: ModelParams):
        pass

    def observe(self, params: ModelParams, src, dst, ts, eidx):
        pass

    def describe(self) -> dict:
        return {}


def _stone_core(
    params: ModelParams, U: np.ndarray, mask: np.ndarray, act_name: str
) -> Tuple[np.ndarray, dict]:
    act = get_activation(act_name)
    alpha = params["stone.alpha"]
    k = U.shape[1]
    if k > alpha.shape[0]:
        raise ModelError(f"{k} events exceed the {alpha.shape[0]} aggregation weights")
    weights = alpha[None, :k] * mask
    s = np.einsum("bk,bki->bi", weights, U)
    pre = s @ params["stone.W1"].T
    out = act(pre)
    z = out + U.sum(axis=1)
    normed, ln_cache = layer_norm(z)
    h = normed @ params["stone.W2"].T
    cache = {
        "U": U,
        "mask": mask,
        "s": s,
        "pre": pre,
        "act_out": out,
        "normed": normed,
        "ln": ln_cache,
        "activation": act_name,
    }
    return h, cache


def _stone_core_backward(
    params: ModelParams, cache: dict, dh: np.ndarray, per_example: bool
) -> Dict[str, np.ndarray]:
    act = get_activation(cache["activation"])
    grads = {"stone.W2": weight_grad(dh, cache["normed"], per_example)}
    dz = layer_norm_backward(dh @ params["stone.W2"], cache["ln"])
    dpre = dz * act.grad(cache["pre"], cache["act_out"])
    grads["stone.W1"] = weight_grad(dpre, cache["s"], per_example)
    if params.is_trainable("stone.alpha"):
        ds = dpre @ params["stone.W1"]
        dweights = np.einsum("bi,bki->bk", ds, cache["U"]) * cache["mask"]
        k_total = params["stone.alpha"].shape[0]
        full = np.zeros((dweights.shape[0], k_total), dtype=dweights.dtype)
        full[:, : dweights.shape[1]] = dweights
        grads["stone.alpha"] = full if per_example else full.sum(axis=0)
    return grads


def stone_forward(
    params: ModelParams, H: Sequence[np.ndarray], activation: str = "relu"
) -> Tuple[np.ndarray, dict]:
    """
    SToNe embedding of one node from its ordered event features.

    z = σ(Σ_k α_k W1 u_k) + Σ_k u_k and h = W2 · LayerNorm(z); only the first
    |H| entries of α take part.
    """
    k = params["stone.alpha"].shape[0]
    if len(H) > k:
        raise ModelError(f"{len(H)} events exceed K={k}")
    d_in = params["stone.W1"].shape[1]
    U = np.zeros((1, max(len(H), 1), d_in), dtype=params.dtype)
    mask = np.zeros((1, U.shape[1]), dtype=params.dtype)
    for i, u in enumerate(H):
        if u.shape != (d_in,):
            raise ModelError(f"event feature has shape {u.shape}, expected ({d_in},)")
        U[0, i] = u
        mask[0, i] = 1.0
    h, cache = _stone_core(params, U, mask, activation)
    return h[0], cache


class StoneEncoder(Encoder):
    """
    Aggregates the K most recent event features with learned weights α.

    hops=2 merges the two-hop tree into one newest-first list of capacity
    K·(1+K2); fixed_alpha freezes α at 1/capacity.
    """

    prefix = "stone"

    def __init__(
        self,
        graph: TemporalGraph,
        time_encoder: TimeEncoder,
        k: int,
        d_out: int,
        activation: str = "relu",
        sampling: str = RECENT,
        hops: int = 1,
        k2: Optional[int] = None,
        direction: str = BIDIRECTED,
        fixed_alpha: bool = False,
        rng: Optional[np.random.Generator] = None,
    ):
        if hops not in (1, 2):
            raise ModelError(f"SToNe supports 1 or 2 hops, got {hops}")
        self.graph = graph
        self.time_encoder = time_encoder
        self.layout = FeatureLayout.for_graph(graph, time_encoder)
        self.k = int(k)
        self.k2 = int(k2 if k2 is not None else k)
        self.hops = hops
        self.d_in = self.layout.d_in
        self.d_out = int(d_out)
        self.activation = get_activation(activation).name
        self.fixed_alpha = fixed_alpha
        self.sampler = NeighborSampler(graph, resolve_mode(sampling), direction, rng)

    @property
    def capacity(self) -> int:
        return self.k if self.hops == 1 else self.k * (1 + self.k2)

    def param_specs(self) -> List[ParamSpec]:
        if self.fixed_alpha:
            alpha = ParamSpec(
                "stone.alpha",
                (self.capacity,),
                init="constant",
                trainable=False,
                value=1.0 / self.capacity,
            )
        else:
            alpha = ParamSpec("stone.alpha", (self.capacity,), init="alpha_uniform")
        return [
            alpha,
            ParamSpec("stone.W1", (self.d_in, self.d_in)),
            ParamSpec("stone.W2", (self.d_out, self.d_in)),
        ]

    def neighborhoods(self, nodes: np.ndarray, times: np.ndarray):
        if self.hops == 1:
            return self.sampler.sample(nodes, times, self.k)
        hop1, hop2 = self.sampler.sample_tree(nodes, times, (self.k, self.k2))
        return merge_two_hop(hop1, hop2)

    def encode(self, params, nodes, times):
        nb = self.neighborhoods(nodes, times)
        U = batch_event_features(self.graph, nb, self.time_encoder).astype(params.dtype)
        return _stone_core(params, U, nb.mask.astype(params.dtype), self.activation)

    def backward(self, params, cache, dh, per_example):
        return _stone_core_backward(params, cache, dh, per_example)

    def describe(self) -> dict:
        return {
            "k": self.k,
            "hops": self.hops,
            "sampling": self.sampler.mode,
            "direction": self.sampler.directionality,
            "fixed_alpha": self.fixed_alpha,
            "activation": self.activation,
        }


@dataclass(frozen=True)
class TreeFeatures:
    """
    Padded temporal tree: xs[d] is (N_d, d_in), masks[d] is (N_d,).

    N_0 is the number of roots and N_{d+1} = N_d * fanouts[d]; rows are
    parent-major so row r of depth d+1 is a child of row r // fanouts[d].
    """

    xs: Tuple[np.ndarray, ...]
    masks: Tuple[np.ndarray, ...]
    fanouts: Tuple[int, ...]

    @property
    def roots(self) -> int:
        return int(self.xs[0].shape[0])


def _gnn_core(
    params: ModelParams, tree: TreeFeatures, act_name: str, residual: bool, layers: int
) -> Tuple[np.ndarray, dict]:
    act = get_activation(act_name)
    depth = layers - 1
    if len(tree.fanouts) != depth:
        raise ModelError(f"tree depth {len(tree.fanouts)} != L-1 = {depth}")
    h = [list(tree.xs)]
    steps = {}
    for ell in range(1, depth + 1):
        W = params[f"gnn.W{ell}"]
        current = []
        for d in range(depth - ell + 1):
            k = tree.fanouts[d]
            children = h[ell - 1][d + 1].reshape(-1, k, h[ell - 1][d + 1].shape[-1])
            cmask = tree.masks[d + 1].reshape(-1, k)
            count = np.maximum(cmask.sum(axis=1, keepdims=True), 1.0)
            agg = np.einsum("nk,nki->ni", cmask, children) / count
            pre = agg @ W.T
            out = act(pre)
            value = out + h[ell - 1][d] if residual and ell >= 2 else out
            steps[(ell, d)] = {"agg": agg, "pre": pre, "out": out, "count": count}
            current.append(value)
        h.append(current)
    cache = {
        "tree": tree,
        "steps": steps,
        "activation": act_name,
        "residual": residual,
        "layers": layers,
    }
    for (ell, d), step in steps.items():
        cache[f"pre_l{ell}_d{d}"] = step["pre"]
    return h[depth][0], cache


def _gnn_core_backward(
    params: ModelParams, cache: dict, dh: np.ndarray, per_example: bool
) -> Dict[str, np.ndarray]:
    act = get_activation(cache["activation"])
    tree: TreeFeatures = cache["tree"]
    depth = cache["layers"] - 1
    roots = tree.roots
    grads: Dict[str, np.ndarray] = {}
    upstream = {(depth, 0): dh}
    for ell in range(depth, 0, -1):
        W = params[f"gnn.W{ell}"]
        for d in range(depth - ell, -1, -1):
            dout = upstream.pop((ell, d), None)
            if dout is None:
                continue
            step = cache["steps"][(ell, d)]
            dpre = dout * act.grad(step["pre"], step["out"])
            g = grouped_weight_grad(dpre, step["agg"], roots, per_example)
            name = f"gnn.W{ell}"
            grads[name] = grads[name] + g if name in grads else g
            if cache["residual"] and ell >= 2:
                key = (ell - 1, d)
                upstream[key] = upstream[key] + dout if key in upstream else dout
            if ell == 1:
                continue
            k = tree.fanouts[d]
            dagg = (dpre @ W) / step["count"]
            cmask = tree.masks[d + 1].reshape(-1, k)
            dchildren = (dagg[:, None, :] * cmask[:, :, None]).reshape(-1, dagg.shape[-1])
            key = (ell - 1, d + 1)
            upstream[key] = upstream[key] + dchildren if key in upstream else dchildren
    return grads


def gnn_forward(
    params: ModelParams,
    tree: TreeFeatures,
    activation: str = "relu",
    residual: bool = False,
) -> float:
    """
    Node-level GNN output f = W_L h^(L-1) for a single-root tree.

    Mean aggregation (P_ij = 1/|N(i)|); an empty neighbor set aggregates to
    zero. The residual term applies from layer 2 on, where dimensions match.
    """
    layers = len(tree.fanouts) + 1
    h, _ = _gnn_core(params, tree, activation, residual, layers)
    return float(h[0] @ params["readout.w"])


class GnnEncoder(Encoder):
    """Mean-aggregation GNN over an (L-1)-hop temporal tree."""

    prefix = "gnn"

    def __init__(
        self,
        graph: TemporalGraph,
        time_encoder: TimeEncoder,
        layers: int,
        hidden: int,
        k: int,
        activation: str = "relu",
        residual: bool = False,
        sampling: str = RECENT,
        direction: str = BIDIRECTED,
        rng: Optional[np.random.Generator] = None,
    ):
        if layers < 2:
            raise ModelError(f"GNN needs L >= 2, got {layers}")
        self.graph = graph
        self.time_encoder = time_encoder
        self.layers = int(layers)
        self.hidden = int(hidden)
        self.d_out = self.hidden
        self.k = int(k)
        self.d_in = FeatureLayout.for_graph(graph, time_encoder).d_in
        self.activation = get_activation(activation).name
        self.residual = residual
        self.sampler = NeighborSampler(graph, resolve_mode(sampling), direction, rng)

    def param_specs(self) -> List[ParamSpec]:
        specs = [ParamSpec("gnn.W1", (self.hidden, self.d_in))]
        for ell in range(2, self.layers):
            specs.append(ParamSpec(f"gnn.W{ell}", (self.hidden, self.hidden)))
        return specs

    def build_tree(self, nodes: np.ndarray, times: np.ndarray, dtype) -> TreeFeatures:
        fanouts = (self.k,) * (self.layers - 1)
        hops = self.sampler.sample_tree(nodes, times, fanouts)
        xs = [self_features(self.graph, nodes, self.time_encoder).astype(dtype)]
        masks = [np.ones(len(nodes), dtype=dtype)]
        for nb in hops:
            U = batch_event_features(self.graph, nb, self.time_encoder)
            xs.append(U.reshape(-1, U.shape[-1]).astype(dtype))
            masks.append(nb.mask.reshape(-1).astype(dtype))
        return TreeFeatures(tuple(xs), tuple(masks), fanouts)

    def encode(self, params, nodes, times):
        tree = self.build_tree(nodes, times, params.dtype)
        return _gnn_core(params, tree, self.activation, self.residual, self.layers)

    def backward(self, params, cache, dh, per_example):
        return _gnn_core_backward(params, cache, dh, per_example)

    def describe(self) -> dict:
        return {
            "layers": self.layers,
            "k": self.k,
            "residual": self.residual,
            "activation": self.activation,
            "direction": self.sampler.directionality,
        }


def _rnn_core(
    params: ModelParams, V: np.ndarray, act_name: str, residual: bool
) -> Tuple[np.ndarray, dict]:
    """V is (B, L-1, d_in), oldest event first."""
    act = get_activation(act_name)
    W0, W1, W2 = params["rnn.W0"], params["rnn.W1"], params["rnn.W2"]
    X = V @ W0.T
    h = np.zeros((V.shape[0], W1.shape[0]), dtype=V.dtype)
    hs, pres, outs = [h], [], []
    for step in range(V.shape[1]):
        pre = RNN_KAPPA * (h @ W1.T + X[:, step] @ W2.T)
        out = act(pre)
        h = out + h if residual else out
        hs.append(h)
        pres.append(pre)
        outs.append(out)
    cache = {"X": X, "hs": hs, "outs": outs, "activation": act_name, "residual": residual}
    for step, pre in enumerate(pres):
        cache[f"pre_step{step}"] = pre
    return h, cache


def _rnn_core_backward(
    params: ModelParams, cache: dict, dh: np.ndarray, per_example: bool
) -> Dict[str, np.ndarray]:
    act = get_activation(cache["activation"])
    W1, W2 = params["rnn.W1"], params["rnn.W2"]
    steps = len(cache["outs"])
    dW1 = dW2 = None
    for step in range(steps - 1, -1, -1):
        pre = cache[f"pre_step{step}"]
        da = RNN_KAPPA * dh * act.grad(pre, cache["outs"][step])
        g1 = weight_grad(da, cache["hs"][step], per_example)
        g2 = weight_grad(da, cache["X"][:, step], per_example)
        dW1 = g1 if dW1 is None else dW1 + g1
        dW2 = g2 if dW2 is None else dW2 + g2
        dh = da @ W1 + (dh if cache["residual"] else 0.0)
    if dW1 is None:
        return {}
    return {"rnn.W1": dW1, "rnn.W2": dW2}


def rnn_forward(
    params: ModelParams,
    events: Sequence[np.ndarray],
    layers: int,
    activation: str = "tanh",
    residual: bool = False,
) -> float:
    """
    Node-level RNN output f = W3 h_{L-1} over events fed oldest to newest.

    Fewer than L-1 events are left-padded with zero events.
    """
    steps = layers - 1
    if steps < 1:
        raise ModelError(f"RNN needs L >= 2, got {layers}")
    d_in = params["rnn.W0"].shape[1]
    events = list(events)[-steps:]
    V = np.zeros((1, steps, d_in), dtype=params.dtype)
    for i, v in enumerate(events):
        V[0, steps - len(events) + i] = v
    h, _ = _rnn_core(params, V, activation, residual)
    return float(h[0] @ params["readout.w"])


class RnnEncoder(Encoder):
    """
    Multi-step RNN over the L-1 most recent event features of the target.

    h_l = σ(κ(W1 h_{l-1} + W2 W0 v_l)) + α h_{l-1}, κ = 1/√2, W0 frozen.
    """

    prefix = "rnn"

    def __init__(
        self,
        graph: TemporalGraph,
        time_encoder: TimeEncoder,
        layers: int,
        hidden: int,
        activation: str = "tanh",
        residual: bool = False,
        direction: str = BIDIRECTED,
    ):
        if layers < 2:
            raise ModelError(f"RNN needs L >= 2, got {layers}")
        self.graph = graph
        self.time_encoder = time_encoder
        self.layers = int(layers)
        self.hidden = int(hidden)
        self.d_out = self.hidden
        self.d_in = FeatureLayout.for_graph(graph, time_encoder).d_in
        self.activation = get_activation(activation).name
        self.residual = residual
        self.sampler = NeighborSampler(graph, RECENT, direction)

    def param_specs(self) -> List[ParamSpec]:
        m = self.hidden
        return [
            ParamSpec("rnn.W0", (m, self.d_in), trainable=False),
            ParamSpec("rnn.W1", (m, m)),
            ParamSpec("rnn.W2", (m, m)),
        ]

    def encode(self, params, nodes, times):
        nb = self.sampler.sample(nodes, times, self.layers - 1)
        U = batch_event_features(self.graph, nb, self.time_encoder).astype(params.dtype)
        # newest-first with padding at the end -> oldest-first, left-padded
        V = U[:, ::-1, :]
        h, cache = _rnn_core(params, V, self.activation, self.residual)
        cache["padded"] = (self.layers - 1) - nb.counts()
        return h, cache

    def backward(self, params, cache, dh, per_example):
        return _rnn_core_backward(params, cache, dh, per_example)

    def describe(self) -> dict:
        return {
            "layers": self.layers,
            "residual": self.residual,
            "activation": self.activation,
            "direction": self.sampler.directionality,
        }


class TemporalModel:
    """
    Encoder plus head, holding the current parameters.

    head="link" scores [h_src ‖ h_dst] with the LinkClassifier; head="node"
    reads out f = w · h_src.
    """

    def __init__(
        self,
        encoder: Encoder,
        head: str = "link",
        mlp_hidden: Optional[int] = None,
        method: str = "custom",
    ):
        if head not in ("link", "node"):
            raise ModelError(f"unknown head {head!r}")
        self.encoder = encoder
        self.head_kind = head
        self.method = method
        if head == "link":
            self.head = LinkClassifier(encoder.d_out, mlp_hidden or encoder.d_out)
        else:
            self.head = NodeReadout(encoder.d_out)
        self.params: Optional[ModelParams] = None

    def param_specs(self) -> List[ParamSpec]:
        return self.encoder.param_specs() + self.head.param_specs()

    def init_params(self, rng: np.random.Generator, m: int, dtype=np.float64) -> ModelParams:
        self.params = param_init(self.param_specs(), rng, m, dtype)
        return self.params

    def _params(self, params: Optional[ModelParams]) -> ModelParams:
        params = params if params is not None else self.params
        if params is None:
            raise ModelError("model parameters are not initialised")
        return params

    def count_params(self) -> int:
        return self._params(None).count

    @property
    def stateful(self) -> bool:
        return self.encoder.stateful

    def reset_state(self, params: Optional[ModelParams] = None):
        self.encoder.reset_state(self._params(params))

    def observe(self, src, dst, ts, eidx, params: Optional[ModelParams] = None):
        self.encoder.observe(self._params(params), src, dst, ts, eidx)

    def forward(
        self, batch: QueryBatch, params: Optional[ModelParams] = None
    ) -> Tuple[np.ndarray, dict]:
        """Scalar outputs (logits or node scores) for every query in the batch."""
        params = self._params(params)
        n = len(batch)
        if self.head_kind == "link":
            if batch.dst is None:
                raise ModelError("link head needs dst nodes")
            nodes = np.concatenate([batch.src, batch.dst])
            times = np.concatenate([batch.ts, batch.ts])
            H, enc_cache = self.encoder.encode(params, nodes, times)
            out, head_cache = self.head.forward(params, H[:n], H[n:])
        else:
            H, enc_cache = self.encoder.encode(params, batch.src, batch.ts)
            out, head_cache = self.head.forward(params, H)
        cache = {"enc": enc_cache, "head": head_cache, "n": n, "layout": params.layout}
        return out, cache

    def backward(
        self,
        cache: dict,
        dout: np.ndarray,
        per_example: bool = False,
        params: Optional[ModelParams] = None,
    ) -> np.ndarray:
        """
        Gradient of Σ_b dout_b · out_b over the trainable vector.

        Returns (P,) or, with per_example, (B, P) with one row per query.
        """
        params = self._params(params)
        if cache["layout"] is not params.layout and cache["layout"] != params.layout:
            raise ModelError("forward cache was produced with a different parameter layout")
        n = cache["n"]
        dout = np.asarray(dout, dtype=params.dtype).reshape(n)
        if self.head_kind == "link":
            head_grads, dh_i, dh_j = self.head.backward(
                params, cache["head"], dout, per_example
            )
            dH = np.concatenate([dh_i, dh_j], axis=0)
            enc_grads = self.encoder.backward(params, cache["enc"], dH, per_example)
            if per_example:
                enc_grads = {k: g[:n] + g[n:] for k, g in enc_grads.items()}
        else:
            head_grads, dH = self.head.backward(params, cache["head"], dout, per_example)
            enc_grads = self.encoder.backward(params, cache["enc"], dH, per_example)
        grads = dict(head_grads)
        grads.update(enc_grads)
        grads = {k: v for k, v in grads.items() if params.is_trainable(k)}
        if per_example and not grads:
            return np.zeros((n, params.count), dtype=params.dtype)
        return params.layout.flatten(grads, per_example, dtype=params.dtype)

    def describe(self) -> dict:
        info = {"method": self.method, "head": self.head_kind}
        info.update(self.encoder.describe())
        return info


class LinearModel:
    """
    f(x) = w · x over raw feature rows; the analytic probe for gradients.

    Batches are (B, d) arrays.
    """

    stateful = False
    method = "linear"

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.params: Optional[ModelParams] = None

    def param_specs(self) -> List[ParamSpec]:
        return [ParamSpec("linear.w", (self.dim,))]

    def init_params(self, rng: np.random.Generator, m: int = 1, dtype=np.float64):
        self.params = param_init(self.param_specs(), rng, m, dtype)
        return self.params

    def count_params(self) -> int:
        return self.dim

    def reset_state(self, params=None):
        pass

    def observe(self, *args, **kwargs):
        pass

    def forward(self, batch: np.ndarray, params: Optional[ModelParams] = None):
        params = params if params is not None else self.params
        X = np.atleast_2d(np.asarray(batch, dtype=params.dtype))
        return X @ params["linear.w"], {"X": X, "layout": params.layout}

    def backward(self, cache, dout, per_example=False, params=None):
        dout = np.asarray(dout).reshape(-1)
        rows = dout[:, None] * cache["X"]
        return rows if per_example else rows.sum(axis=0)

    def describe(self) -> dict:
        return {"method": self.method, "dim": self.dim}


@dataclass(frozen=True)
class ModelConfig:
    """Architecture settings; defaults follow the published hyperparameters."""

    method: str = "stone"
    k: int = 20
    hidden: int = 100
    time_dim: int = DEFAULT_TIME_DIM
    layers: int = 2
    activation: Optional[str] = None
    residual: bool = False
    sampling: str = RECENT
    hops: int = 1
    k2: Optional[int] = None
    direction: str = "bi"
    fixed_alpha: bool = False
    head: str = "link"
    mlp_hidden: Optional[int] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ModelError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.k < 1 or self.hidden < 1 or self.time_dim < 1:
            raise ModelError("k, hidden and time_dim must be >= 1")
        resolve_direction(self.direction)
        resolve_mode(self.sampling)

    @property
    def activation_name(self) -> str:
        return self.activation or DEFAULT_ACTIVATION[self.method]

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def build_model(
    cfg: ModelConfig,
    graph: TemporalGraph,
    sampling_rng: Optional[np.random.Generator] = None,
) -> TemporalModel:
    """Instantiate the encoder and head named by cfg (parameters not drawn)."""
    enc = TimeEncoder(cfg.time_dim)
    act = cfg.activation_name
    if cfg.method == "stone":
        encoder = StoneEncoder(
            graph,
            enc,
            cfg.k,
            cfg.hidden,
            activation=act,
            sampling=cfg.sampling,
            hops=cfg.hops,
            k2=cfg.k2,
            direction=cfg.direction,
            fixed_alpha=cfg.fixed_alpha,
            rng=sampling_rng,
        )
    elif cfg.method == "gnn":
        encoder = GnnEncoder(
            graph,
            enc,
            cfg.layers,
            cfg.hidden,
            cfg.k,
            activation=act,
            residual=cfg.residual,
            sampling=cfg.sampling,
            direction=cfg.direction,
            rng=sampling_rng,
        )
    elif cfg.method == "rnn":
        encoder = RnnEncoder(
            graph,
            enc,
            cfg.layers,
            cfg.hidden,
            activation=act,
            residual=cfg.residual,
            direction=cfg.direction,
        )
    else:
        from memory_model import MemoryEncoder

        encoder = MemoryEncoder(graph, enc, cfg.hidden, activation=act)
    model = TemporalModel(encoder, head=cfg.head, mlp_hidden=cfg.mlp_hidden, method=cfg.method)
    logger.debug(f"Built {cfg.method} model: {model.describe()}")
    return model
