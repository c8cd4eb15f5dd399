"""
Gradient entry points and the finite-difference oracle.

model_grad runs the hand-derived backward pass; finite_difference_grad
perturbs one coordinate of the flat trainable vector at a time (central
differences) in the same documented order.
"""

import logging
from typing import Callable, Iterator, Optional

import numpy as np

from nn_layers import ModelParams, bce_with_logits, logistic_loss
from time_features import ModelError

logger = logging.getLogger(__name__)

SELECTORS = ("output", "bce", "logistic")


def _resolve_selector(selector: str) -> str:
    if selector == "loss":
        return "bce"
    if selector not in SELECTORS:
        raise ModelError(f"unknown gradient selector {selector!r}; choose from {SELECTORS}")
    return selector


def _objective_and_seed(outputs: np.ndarray, selector: str, labels) -> tuple:
    if selector == "output":
        return float(np.sum(outputs)), np.ones_like(outputs)
    if labels is None:
        raise ModelError(f"selector {selector!r} needs labels")
    if selector == "bce":
        return bce_with_logits(outputs, labels)
    return logistic_loss(outputs, labels)


def model_grad(
    model,
    batch,
    selector: str = "output",
    labels=None,
    per_example: bool = False,
    params: Optional[ModelParams] = None,
) -> np.ndarray:
    """
    Flattened gradient over the trainable parameters.

    Args:
        model: TemporalModel, LinearModel or anything with forward/backward
        batch: model input (QueryBatch or feature rows)
        selector: "output" for ∇ Σ f (the Jacobian rows with per_example),
            "bce" (alias "loss") for mean binary cross-entropy on {0,1}
            labels, "logistic" for mean log(1 + e^(−y f)) on ±1 labels
        labels: targets for the loss selectors
        per_example: return one gradient row per query

    Returns:
        (P,) vector, or (B, P) with per_example.
    """
    selector = _resolve_selector(selector)
    outputs, cache = model.forward(batch, params)
    _, seed = _objective_and_seed(outputs, selector, labels)
    return model.backward(cache, seed, per_example=per_example, params=params)


def objective(
    model, batch, selector: str = "output", labels=None, params: Optional[ModelParams] = None
) -> float:
    outputs, _ = model.forward(batch, params)
    value, _ = _objective_and_seed(outputs, _resolve_selector(selector), labels)
    return float(value)


def numeric_grad(fn: Callable[[np.ndarray], float], theta: np.ndarray, eps: float) -> np.ndarray:
    """Central differences of a scalar function of a flat vector."""
    if eps <= 0:
        raise ModelError(f"finite-difference step must be > 0, got {eps}")
    theta = np.array(theta, dtype=np.float64)
    grad = np.zeros_like(theta)
    for i in range(theta.shape[0]):
        keep = theta[i]
        theta[i] = keep + eps
        up = fn(theta)
        theta[i] = keep - eps
        down = fn(theta)
        theta[i] = keep
        grad[i] = (up - down) / (2.0 * eps)
    return grad


def finite_difference_grad(
    model,
    batch,
    eps: float = 1e-4,
    selector: str = "output",
    labels=None,
    params: Optional[ModelParams] = None,
) -> np.ndarray:
    """
    Central-difference gradient in the documented flattening order.

    Stateful models are evaluated against their current (detached) state.
    """
    base = params if params is not None else model.params

    def fn(theta: np.ndarray) -> float:
        return objective(model, batch, selector, labels, base.with_vector(theta))

    return numeric_grad(fn, base.vector, eps)


def _pre_activations(cache) -> Iterator[np.ndarray]:
    if isinstance(cache, dict):
        for key, value in cache.items():
            if isinstance(key, str) and key.startswith("pre") and isinstance(value, np.ndarray):
                yield value
            elif isinstance(value, dict):
                yield from _pre_activations(value)


def kink_margin(cache: dict) -> float:
    """
    Smallest |pre-activation| over a forward cache.

    Exact zeros come from zero inputs (padding, empty histories) that stay
    zero under parameter perturbation, so they are skipped.
    """
    margin = np.inf
    for pre in _pre_activations(cache):
        values = np.abs(pre[pre != 0])
        if values.size:
            margin = min(margin, float(values.min()))
    return margin


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """‖a − n‖∞ / (1 + ‖n‖∞)."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric)) / (1.0 + np.max(np.abs(numeric))))
