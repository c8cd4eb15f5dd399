"""
Memory-based temporal model with StopGrad memory.

Each node keeps a memory block s_i updated whenever it interacts:

    s_i(t) = σ(κ(W1 s⁺_i + W2 s⁺_j + W3 e_ij(t))),   κ = 1/√3

where s⁺ are stored values read as constants and s_i(0) = W0 x_i with W0
frozen. The last message of every node is kept so a query recomputes that
final update with the current parameters; gradients stop there.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from nn_layers import ModelParams, ParamSpec, get_activation, weight_grad
from temporal_graph import TemporalGraph
from tgl_models import Encoder
from time_features import FeatureLayout, ModelError, TimeEncoder

logger = logging.getLogger(__name__)

MEMORY_KAPPA = 1.0 / np.sqrt(3.0)


@dataclass
class MemoryState:
    """
    Per-node memory plus the inputs of each node's latest update.

    last_time is NaN for nodes that have not interacted yet. Single writer,
    updated in timestamp order.
    """

    s: np.ndarray
    last_time: np.ndarray
    msg_self: np.ndarray
    msg_other: np.ndarray
    msg_edge: np.ndarray
    has_msg: np.ndarray

    @classmethod
    def initial(cls, params: ModelParams, node_feats: np.ndarray, d_msg: int) -> "MemoryState":
        W0 = params["memory.W0"]
        m = W0.shape[0]
        num_nodes = node_feats.shape[0]
        dtype = params.dtype
        return cls(
            s=(node_feats.astype(dtype) @ W0.T).reshape(num_nodes, m),
            last_time=np.full(num_nodes, np.nan),
            msg_self=np.zeros((num_nodes, m), dtype=dtype),
            msg_other=np.zeros((num_nodes, m), dtype=dtype),
            msg_edge=np.zeros((num_nodes, d_msg), dtype=dtype),
            has_msg=np.zeros(num_nodes, dtype=bool),
        )

    def copy(self) -> "MemoryState":
        return MemoryState(
            self.s.copy(),
            self.last_time.copy(),
            self.msg_self.copy(),
            self.msg_other.copy(),
            self.msg_edge.copy(),
            self.has_msg.copy(),
        )


def memory_param_specs(hidden: int, d_n: int, d_msg: int) -> List[ParamSpec]:
    m = hidden
    return [
        ParamSpec("memory.W0", (m, d_n), trainable=False),
        ParamSpec("memory.W1", (m, m)),
        ParamSpec("memory.W2", (m, m)),
        ParamSpec("memory.W3", (m, d_msg)),
    ]


def _message(
    state: MemoryState,
    node: int,
    t: float,
    edge_feat: np.ndarray,
    time_encoder: Optional[TimeEncoder],
) -> np.ndarray:
    if time_encoder is None:
        return edge_feat
    last = state.last_time[node]
    dt = 0.0 if np.isnan(last) else t - last
    return np.concatenate([edge_feat, time_encoder(dt)])


def memory_step(
    params: ModelParams,
    state: MemoryState,
    src: int,
    dst: int,
    t: float,
    edge_feat: np.ndarray,
    time_encoder: Optional[TimeEncoder] = None,
    activation: str = "tanh",
) -> MemoryState:
    """
    Apply one interaction to both endpoints' memories, in place.

    The message is the edge feature, extended by ψ(t − last_time) of the
    updated node when a time encoder is given. Both updates read the memory
    values from before this interaction.
    """
    for node in (src, dst):
        last = state.last_time[node]
        if not np.isnan(last) and t < last:
            raise ModelError(
                f"interaction at {t} is older than node {node}'s last update at {last}"
            )
    act = get_activation(activation)
    W1, W2, W3 = params["memory.W1"], params["memory.W2"], params["memory.W3"]
    dtype = params.dtype
    edge_feat = np.asarray(edge_feat, dtype=np.float64)
    e_src = _message(state, src, t, edge_feat, time_encoder).astype(dtype)
    e_dst = _message(state, dst, t, edge_feat, time_encoder).astype(dtype)
    s_src, s_dst = state.s[src].copy(), state.s[dst].copy()

    new_src = act(MEMORY_KAPPA * (W1 @ s_src + W2 @ s_dst + W3 @ e_src))
    new_dst = act(MEMORY_KAPPA * (W1 @ s_dst + W2 @ s_src + W3 @ e_dst))

    for node, mine, other, e, new in (
        (src, s_src, s_dst, e_src, new_src),
        (dst, s_dst, s_src, e_dst, new_dst),
    ):
        state.msg_self[node] = mine
        state.msg_other[node] = other
        state.msg_edge[node] = e
        state.has_msg[node] = True
        state.s[node] = new
        state.last_time[node] = t
    return state


class MemoryEncoder(Encoder):
    """
    Embeds a node as its memory, recomputing the last update with the
    current parameters (StopGrad on the stored inputs).
    """

    prefix = "memory"
    stateful = True

    def __init__(
        self,
        graph: TemporalGraph,
        time_encoder: TimeEncoder,
        hidden: int,
        activation: str = "tanh",
    ):
        self.graph = graph
        self.time_encoder = time_encoder
        self.hidden = int(hidden)
        self.d_out = self.hidden
        self.d_msg = graph.d_e + time_encoder.d_t
        self.layout = FeatureLayout.for_graph(graph, time_encoder)
        self.activation = get_activation(activation).name
        self.state: Optional[MemoryState] = None

    def param_specs(self) -> List[ParamSpec]:
        return memory_param_specs(self.hidden, self.graph.d_n, self.d_msg)

    def reset_state(self, params: ModelParams):
        self.state = MemoryState.initial(params, self.graph.node_feats, self.d_msg)

    def _require_state(self, params: ModelParams) -> MemoryState:
        if self.state is None or self.state.s.dtype != params.dtype:
            self.reset_state(params)
        return self.state

    def observe(self, params, src, dst, ts, eidx):
        state = self._require_state(params)
        g = self.graph
        rows = zip(
            np.atleast_1d(src), np.atleast_1d(dst), np.atleast_1d(ts), np.atleast_1d(eidx)
        )
        for i, j, t, e in rows:
            memory_step(
                params,
                state,
                int(i),
                int(j),
                float(t),
                g.edge_feats[int(e)],
                self.time_encoder,
                self.activation,
            )

    def replay(self, params: ModelParams, end: int, start: int = 0):
        """Reset memory and feed interactions [start, end) in order."""
        self.reset_state(params)
        g = self.graph
        idx = np.arange(start, end)
        self.observe(params, g.src[idx], g.dst[idx], g.ts[idx], idx)

    def encode(self, params, nodes, times):
        state = self._require_state(params)
        nodes = np.asarray(nodes, dtype=np.int64)
        has = state.has_msg[nodes]
        a = np.where(has[:, None], state.msg_self[nodes], 0.0).astype(params.dtype)
        b = np.where(has[:, None], state.msg_other[nodes], 0.0).astype(params.dtype)
        e = np.where(has[:, None], state.msg_edge[nodes], 0.0).astype(params.dtype)
        act = get_activation(self.activation)
        pre = MEMORY_KAPPA * (
            a @ params["memory.W1"].T + b @ params["memory.W2"].T + e @ params["memory.W3"].T
        )
        out = act(pre)
        initial = self.graph.node_feats[nodes].astype(params.dtype) @ params["memory.W0"].T
        h = np.where(has[:, None], out, initial)
        cache = {"a": a, "b": b, "e": e, "pre": pre, "out": out, "has": has}
        return h, cache

    def backward(self, params, cache, dh, per_example) -> Dict[str, np.ndarray]:
        act = get_activation(self.activation)
        live = cache["has"][:, None].astype(dh.dtype)
        da = MEMORY_KAPPA * dh * act.grad(cache["pre"], cache["out"]) * live
        return {
            "memory.W1": weight_grad(da, cache["a"], per_example),
            "memory.W2": weight_grad(da, cache["b"], per_example),
            "memory.W3": weight_grad(da, cache["e"], per_example),
        }

    def describe(self) -> dict:
        return {"hidden": self.hidden, "activation": self.activation}
