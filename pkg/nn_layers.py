"""
Neural network building blocks with hand-derived backward passes.

Parameters live in one flat vector (ModelParams) with named, row-major views
in a fixed documented order; frozen matrices are kept beside it and never
enter the gradient.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from time_features import ModelError

logger = logging.getLogger(__name__)

LAYER_NORM_EPS = 1e-5


@dataclass(frozen=True)
class Activation:
    """Elementwise activation with its derivative and Lipschitz constant."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    # derivative expressed through (pre-activation, output)
    grad: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lipschitz: float
    smooth: bool

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.fn(x)


LEAKY_SLOPE = 0.01

ACTIVATIONS: Dict[str, Activation] = {
    "relu": Activation(
        "relu",
        lambda x: np.maximum(x, 0.0),
        lambda x, y: (x > 0).astype(x.dtype),
        1.0,
        False,
    ),
    "leaky_relu": Activation(
        "leaky_relu",
        lambda x: np.where(x > 0, x, LEAKY_SLOPE * x),
        lambda x, y: np.where(x > 0, 1.0, LEAKY_SLOPE).astype(x.dtype),
        1.0,
        False,
    ),
    "tanh": Activation("tanh", np.tanh, lambda x, y: 1.0 - y * y, 1.0, True),
    "sigmoid": Activation(
        "sigmoid", expit, lambda x, y: y * (1.0 - y), 0.25, True
    ),
}


def get_activation(name: str) -> Activation:
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ModelError(
            f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}"
        ) from None


def layer_norm(z: np.ndarray, eps: float = LAYER_NORM_EPS) -> Tuple[np.ndarray, dict]:
    """
    Row-wise LayerNorm without affine terms.

    All-zero rows are returned as zeros and receive zero gradient.
    """
    mu = z.mean(axis=-1, keepdims=True)
    centered = z - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    zero_rows = ~np.any(z != 0, axis=-1, keepdims=True)
    out = np.where(zero_rows, 0.0, centered * inv)
    return out, {"out": out, "inv": inv, "zero_rows": zero_rows}


def layer_norm_backward(dout: np.ndarray, cache: dict) -> np.ndarray:
    out, inv = cache["out"], cache["inv"]
    dz = inv * (
        dout
        - dout.mean(axis=-1, keepdims=True)
        - out * (dout * out).mean(axis=-1, keepdims=True)
    )
    return np.where(cache["zero_rows"], 0.0, dz)


def weight_grad(dy: np.ndarray, x: np.ndarray, per_example: bool) -> np.ndarray:
    """dL/dW for y = x @ W.T, summed over the batch or kept per row."""
    if per_example:
        return np.einsum("bi,bj->bij", dy, x)
    return dy.T @ x


def bias_grad(dy: np.ndarray, per_example: bool) -> np.ndarray:
    return dy if per_example else dy.sum(axis=0)


@dataclass(frozen=True)
class ParamSpec:
    """
    One named parameter block.

    init is one of: gaussian (N(0, 1/m)), zeros, alpha_uniform
    (U(-sqrt(3/K), sqrt(3/K))), constant (filled with `value`).
    """

    name: str
    shape: Tuple[int, ...]
    init: str = "gaussian"
    trainable: bool = True
    value: float = 0.0

    @property
    def size(self) -> int:
        return int(np.prod(self.shape)) if self.shape else 1


@dataclass(frozen=True)
class ParamLayout:
    """Ordered trainable blocks of the flat parameter vector."""

    specs: Tuple[ParamSpec, ...]

    def __post_init__(self):
        offsets = {}
        start = 0
        for s in self.specs:
            offsets[s.name] = (start, start + s.size)
            start += s.size
        object.__setattr__(self, "_offsets", offsets)
        object.__setattr__(self, "_shapes", {s.name: s.shape for s in self.specs})

    @property
    def names(self) -> List[str]:
        return [s.name for s in self.specs]

    @property
    def size(self) -> int:
        return sum(s.size for s in self.specs)

    def offsets(self) -> Dict[str, Tuple[int, int]]:
        return dict(self._offsets)

    def shape(self, name: str) -> Tuple[int, ...]:
        return self._shapes[name]

    def views(self, vector: np.ndarray) -> Dict[str, np.ndarray]:
        return {
            name: vector[lo:hi].reshape(spec.shape)
            for (name, (lo, hi)), spec in zip(self.offsets().items(), self.specs)
        }

    def flatten(
        self, grads: Mapping[str, np.ndarray], per_example: bool = False, dtype=np.float64
    ) -> np.ndarray:
        """
        Concatenate named gradients in layout order.

        Blocks absent from `grads` are zero. With per_example the leading
        axis of every block is the batch axis and the result is (B, P).
        """
        if per_example:
            batch = next(iter(grads.values())).shape[0] if grads else 0
            out = np.zeros((batch, self.size), dtype=dtype)
        else:
            out = np.zeros(self.size, dtype=dtype)
        for spec, (lo, hi) in zip(self.specs, self.offsets().values()):
            if spec.name not in grads:
                continue
            g = grads[spec.name]
            if per_example:
                out[:, lo:hi] = g.reshape(g.shape[0], -1)
            else:
                out[lo:hi] = g.reshape(-1)
        return out


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Flat trainable vector plus frozen blocks."""

    layout: ParamLayout
    vector: np.ndarray
    frozen: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.vector.shape != (self.layout.size,):
            raise ModelError(
                f"parameter vector has shape {self.vector.shape}, layout needs {self.layout.size}"
            )

    @property
    def dtype(self):
        return self.vector.dtype

    @property
    def count(self) -> int:
        return self.layout.size

    def __getitem__(self, name: str) -> np.ndarray:
        if name in self.frozen:
            return self.frozen[name]
        offsets = self.layout._offsets
        if name not in offsets:
            raise ModelError(f"no parameter named {name!r}")
        lo, hi = offsets[name]
        return self.vector[lo:hi].reshape(self.layout.shape(name))

    def __contains__(self, name: str) -> bool:
        return name in self.frozen or name in self.layout.names

    def is_trainable(self, name: str) -> bool:
        return name in self.layout.names

    def with_vector(self, vector: np.ndarray) -> "ModelParams":
        return ModelParams(self.layout, np.asarray(vector, dtype=self.dtype), self.frozen)

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(
            self.layout,
            self.vector.astype(dtype),
            {k: v.astype(dtype) for k, v in self.frozen.items()},
        )

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.layout, self.vector.copy(), {k: v.copy() for k, v in self.frozen.items()}
        )


def param_init(
    specs: Sequence[ParamSpec], rng: np.random.Generator, m: int, dtype=np.float64
) -> ModelParams:
    """
    Draw parameters: Gaussian blocks N(0, 1/m), α blocks U(±√(3/K)).

    Trainable blocks go into the flat vector in the order given; frozen
    blocks are kept by name.
    """
    if m < 1:
        raise ModelError(f"hidden dimension must be >= 1, got {m}")
    trainable, frozen_values, flat = [], {}, []
    for spec in specs:
        if spec.init == "gaussian":
            value = rng.normal(0.0, np.sqrt(1.0 / m), size=spec.shape)
        elif spec.init == "alpha_uniform":
            bound = np.sqrt(3.0 / spec.shape[0])
            value = rng.uniform(-bound, bound, size=spec.shape)
        elif spec.init == "zeros":
            value = np.zeros(spec.shape)
        elif spec.init == "constant":
            value = np.full(spec.shape, spec.value)
        else:
            raise ModelError(f"unknown initializer {spec.init!r} for {spec.name}")
        if spec.trainable:
            trainable.append(spec)
            flat.append(np.asarray(value, dtype=dtype).reshape(-1))
        else:
            frozen_values[spec.name] = np.asarray(value, dtype=dtype)
    vector = np.concatenate(flat) if flat else np.zeros(0, dtype=dtype)
    return ModelParams(ParamLayout(tuple(trainable)), vector.astype(dtype), frozen_values)


class LinkClassifier:
    """
    2-layer perceptron on [h_i ‖ h_j] → scalar logit.

    logit = V2 · ReLU(V1 · [h_i ‖ h_j] + b1) + b2
    """

    prefix = "cls"

    def __init__(self, d_out: int, d_mlp: int):
        self.d_out = d_out
        self.d_mlp = d_mlp

    def param_specs(self) -> List[ParamSpec]:
        p = self.prefix
        return [
            ParamSpec(f"{p}.V1", (self.d_mlp, 2 * self.d_out)),
            ParamSpec(f"{p}.b1", (self.d_mlp,), init="zeros"),
            ParamSpec(f"{p}.V2", (1, self.d_mlp)),
            ParamSpec(f"{p}.b2", (1,), init="zeros"),
        ]

    def forward(
        self, params: ModelParams, h_i: np.ndarray, h_j: np.ndarray
    ) -> Tuple[np.ndarray, dict]:
        p = self.prefix
        if h_i.shape[-1] != self.d_out or h_j.shape[-1] != self.d_out:
            raise ModelError(
                f"classifier expects embeddings of size {self.d_out}, "
                f"got {h_i.shape[-1]}/{h_j.shape[-1]}"
            )
        x = np.concatenate([h_i, h_j], axis=1)
        pre = x @ params[f"{p}.V1"].T + params[f"{p}.b1"]
        hidden = np.maximum(pre, 0.0)
        logits = hidden @ params[f"{p}.V2"][0] + params[f"{p}.b2"][0]
        return logits, {"x": x, "pre_cls": pre, "hidden": hidden}

    def backward(
        self, params: ModelParams, cache: dict, dlogits: np.ndarray, per_example: bool
    ) -> Tuple[Dict[str, np.ndarray], np.ndarray, np.ndarray]:
        """Returns (named grads, dh_i, dh_j)."""
        p = self.prefix
        V2 = params[f"{p}.V2"]
        dlog = dlogits[:, None]
        grads = {
            f"{p}.V2": weight_grad(dlog, cache["hidden"], per_example),
            f"{p}.b2": bias_grad(dlog, per_example),
        }
        dpre = (dlog @ V2) * (cache["pre_cls"] > 0)
        grads[f"{p}.V1"] = weight_grad(dpre, cache["x"], per_example)
        grads[f"{p}.b1"] = bias_grad(dpre, per_example)
        dx = dpre @ params[f"{p}.V1"]
        return grads, dx[:, : self.d_out], dx[:, self.d_out :]


class NodeReadout:
    """Scalar node-level readout f = w · h."""

    prefix = "readout"

    def __init__(self, d_out: int):
        self.d_out = d_out

    def param_specs(self) -> List[ParamSpec]:
        return [ParamSpec(f"{self.prefix}.w", (self.d_out,))]

    def forward(self, params: ModelParams, h: np.ndarray) -> Tuple[np.ndarray, dict]:
        return h @ params[f"{self.prefix}.w"], {"h": h}

    def backward(
        self, params: ModelParams, cache: dict, dout: np.ndarray, per_example: bool
    ) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
        dw = dout[:, None] * cache["h"]
        grads = {f"{self.prefix}.w": dw if per_example else dw.sum(axis=0)}
        return grads, dout[:, None] * params[f"{self.prefix}.w"][None, :]


def link_score(
    c: LinkClassifier, params: ModelParams, h_i: np.ndarray, h_j: np.ndarray
) -> float:
    """Scalar logit for one (h_i, h_j) pair."""
    logits, _ = c.forward(params, np.atleast_2d(h_i), np.atleast_2d(h_j))
    return float(logits[0])


def bce_with_logits(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean binary cross-entropy on logits with {0,1} labels, and dL/dlogits."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    n = max(logits.shape[0], 1)
    loss = float(np.mean(np.logaddexp(0.0, logits) - labels * logits)) if logits.size else 0.0
    return loss, (expit(logits) - labels) / n


def logistic_loss(outputs: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean of ψ(y f) = log(1 + e^(−y f)) with ±1 labels, and dL/df."""
    f = np.asarray(outputs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if not np.all(np.abs(y) == 1):
        raise ModelError("logistic loss needs labels in {-1, +1}")
    n = max(f.shape[0], 1)
    loss = float(np.mean(np.logaddexp(0.0, -y * f))) if f.size else 0.0
    return loss, -y * expit(-y * f) / n


def merge_grads(*parts: Optional[Mapping[str, np.ndarray]]) -> Dict[str, np.ndarray]:
    out: Dict[str, np.ndarray] = {}
    for part in parts:
        if part:
            for name, g in part.items():
                out[name] = out[name] + g if name in out else g
    return out
