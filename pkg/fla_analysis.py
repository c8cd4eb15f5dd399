"""
Feature-label alignment and generalization-error scores.

- Inputs: a model at its initial parameters and labelled link examples
- Outputs: FlaReport (fla = yᵀ(JJᵀ)⁻¹y, R = √fla), GeScore, JSON/CSV artifacts
- Features:
  * per-example Jacobian rows in the model's flattening order (64-bit)
  * Cholesky Gram solve with a jitter ladder relative to trace(K)/N
  * architecture constants C, D per model family and composite scores
  * minimum-norm perturbation, generalization gap, Σα diagnostic
"""

import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigvalsh
from scipy.stats import spearmanr
from tqdm import tqdm

from grad_check import model_grad
from neighbor_sampling import negative_pool, sample_negatives
from nn_layers import ModelParams, get_activation
from temporal_graph import SplitSpec, StglError, TemporalGraph
from tgl_models import QueryBatch

logger = logging.getLogger(__name__)

DEFAULT_N_SUB = 5000
JITTER_LADDER = (1e-10, 1e-8, 1e-6)
GE_KINDS = ("gnn", "rnn", "memory", "stone")
LABEL_MODE = "mixed"

# published model families as products of component scores
COMPOSITE_PRESETS: Dict[str, Tuple[Tuple[str, Optional[int]], ...]] = {
    "tgat": (("gnn", 3),),
    "jodie": (("memory", None),),
    "tgn": (("gnn", 2), ("memory", None)),
    "apan": (("gnn", 2), ("memory", None)),
    "dysat": (("gnn", 3), ("rnn", 4)),
    "stone": (("stone", 2),),
}


class FlaError(StglError, ArithmeticError):
    """Gram matrix could not be factorised even at the largest jitter."""

    def __init__(self, message: str, eigenvalues: Optional[Tuple[float, float]] = None):
        self.eigenvalues = eigenvalues
        if eigenvalues is not None:
            message = f"{message} (eigenvalues min={eigenvalues[0]:.3e}, max={eigenvalues[1]:.3e})"
        super().__init__(message)


@dataclass
class FlaExamples:
    """
    Labelled queries for the Jacobian.

    interaction holds, per row, the index of the interaction it was built
    from (None for plain feature rows).
    """

    batch: Union[QueryBatch, np.ndarray]
    labels: np.ndarray
    interaction: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return int(self.labels.shape[0])


@dataclass
class JacobianMatrix:
    J: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.J = np.asarray(self.J, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        if self.J.ndim != 2 or self.J.shape[0] != self.labels.shape[0]:
            raise FlaError(f"Jacobian {self.J.shape} does not match {self.labels.shape[0]} labels")
        if not np.all(np.isfinite(self.J)):
            raise FlaError("Jacobian has non-finite entries")

    @property
    def n_sub(self) -> int:
        return int(self.J.shape[0])

    @property
    def p(self) -> int:
        return int(self.J.shape[1])


@dataclass(frozen=True)
class FlaReport:
    fla: float
    r: float
    n_sub: int
    p: int
    jitter: float
    eig_min: float
    eig_max: float
    overparam_ok: bool
    labels: str = LABEL_MODE

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GeScore:
    kind: str
    layers: Optional[int]
    rho: float
    tau: float
    c: float
    d: float
    r: float
    n: int
    ge: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CompositeGe:
    name: str
    parts: Tuple[GeScore, ...]
    ge: float


def fla_examples(
    g: TemporalGraph,
    split: SplitSpec,
    n_sub: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> FlaExamples:
    """
    The last training links as alternating (+1 positive, −1 negative) rows.

    n_sub rows use the last ceil(n_sub/2) training interactions, each
    followed by a uniform negative for the same source and time.
    """
    _, train_end = split.train_range
    if train_end < 1:
        raise FlaError("training split is empty")
    rng = rng if rng is not None else np.random.default_rng(0)
    if n_sub is None:
        n_sub = min(DEFAULT_N_SUB, train_end)
    if n_sub < 2:
        raise FlaError(f"n_sub must be >= 2, got {n_sub}")
    n_pos = math.ceil(n_sub / 2)
    if n_pos > train_end:
        raise FlaError(f"n_sub={n_sub} needs {n_pos} training interactions, have {train_end}")

    idx = np.arange(train_end - n_pos, train_end)
    negs = sample_negatives(rng, negative_pool(g), g.dst[idx])
    src = np.repeat(g.src[idx], 2)[:n_sub]
    ts = np.repeat(g.ts[idx], 2)[:n_sub]
    dst = np.stack([g.dst[idx], negs], axis=1).reshape(-1)[:n_sub]
    labels = np.tile([1.0, -1.0], n_pos)[:n_sub]
    rows = np.repeat(idx, 2)[:n_sub]
    return FlaExamples(QueryBatch(src, ts, dst), labels, rows)


def _row_slice(batch, index: np.ndarray):
    if isinstance(batch, QueryBatch):
        return batch.subset(index)
    return np.asarray(batch)[index]


def compute_jacobian(
    model,
    examples: FlaExamples,
    g: Optional[TemporalGraph] = None,
    params: Optional[ModelParams] = None,
    chunk: int = 256,
    batch_size: int = 600,
    show_progress: bool = False,
) -> JacobianMatrix:
    """
    Per-example gradients of the model output at the given parameters.

    Computed in 64-bit. Stateful models replay the stream up to the first
    example and then advance in chronological batches of `batch_size`
    interactions, so each row sees the memory the trainer would.
    """
    params = params if params is not None else model.params
    if params is None:
        raise FlaError("model parameters are not initialised")
    params = params.astype(np.float64)
    n = len(examples)
    if n < 2:
        raise FlaError(f"need at least 2 examples, got {n}")

    stateful = getattr(model, "stateful", False)
    if stateful:
        if g is None or examples.interaction is None:
            raise FlaError("stateful models need the graph and interaction indices")
        groups = _interaction_groups(examples.interaction, batch_size)
        first = int(examples.interaction.min())
        model.reset_state(params)
        for lo in range(0, first, batch_size):
            idx = np.arange(lo, min(lo + batch_size, first))
            model.observe(g.src[idx], g.dst[idx], g.ts[idx], idx, params)
    else:
        groups = [np.arange(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]

    rows = np.empty((n, params.count), dtype=np.float64)
    iterator = tqdm(groups, desc="Jacobian rows", unit="chunk") if show_progress else groups
    for rows_idx in iterator:
        batch = _row_slice(examples.batch, rows_idx)
        rows[rows_idx] = model_grad(model, batch, "output", per_example=True, params=params)
        if stateful:
            done = np.unique(examples.interaction[rows_idx])
            model.observe(g.src[done], g.dst[done], g.ts[done], done, params)
    logger.info(f"🧮 Jacobian {n} × {params.count} computed")
    return JacobianMatrix(rows, examples.labels)


def _interaction_groups(interaction: np.ndarray, batch_size: int) -> List[np.ndarray]:
    """Row indices grouped by consecutive blocks of `batch_size` interactions."""
    interaction = np.asarray(interaction, dtype=np.int64)
    if np.any(np.diff(interaction) < 0):
        raise FlaError("examples must be in chronological order")
    first = int(interaction.min())
    block = (interaction - first) // batch_size
    return [np.flatnonzero(block == b) for b in np.unique(block)]


def _as_jacobian(J, y=None) -> JacobianMatrix:
    if isinstance(J, JacobianMatrix):
        return J if y is None else JacobianMatrix(J.J, y)
    if y is None:
        raise FlaError("labels are required with a raw Jacobian array")
    return JacobianMatrix(J, y)


def _extreme_eigenvalues(K: np.ndarray) -> Tuple[float, float]:
    n = K.shape[0]
    low = eigvalsh(K, subset_by_index=[0, 0])[0]
    high = eigvalsh(K, subset_by_index=[n - 1, n - 1])[0]
    return float(low), float(high)


def _gram_solve(K: np.ndarray, y: np.ndarray, jitter: float) -> Tuple[np.ndarray, float]:
    """Solve (K + λI)v = y, escalating λ along the ladder until K + λI is SPD."""
    if jitter < 0:
        raise FlaError(f"jitter must be >= 0, got {jitter}")
    n = K.shape[0]
    scale = float(np.trace(K)) / n
    ladder = [jitter] + [c * scale for c in JITTER_LADDER if c * scale > jitter]
    for lam in ladder:
        try:
            factor = cho_factor(K + lam * np.eye(n), lower=True, check_finite=False)
        except LinAlgError:
            logger.debug(f"Gram factorisation failed at jitter {lam:.3e}")
            continue
        if lam > jitter:
            logger.warning(f"⚠️ Gram matrix needed jitter {lam:.3e} to factorise")
        return cho_solve(factor, y, check_finite=False), lam
    raise FlaError(
        "Gram matrix is not positive definite at the largest jitter",
        _extreme_eigenvalues(K),
    )


def compute_fla(J, y=None, jitter: float = 0.0) -> FlaReport:
    """
    fla = yᵀ(JJᵀ + λI)⁻¹y by Cholesky, with automatic jitter escalation.

    Args:
        J: JacobianMatrix, or a raw (N, P) array together with y
        y: ±1 labels when J is a raw array
        jitter: starting λ

    Returns:
        FlaReport with the λ actually used and the extreme eigenvalues of JJᵀ.
    """
    jac = _as_jacobian(J, y)
    K = jac.J @ jac.J.T
    v, lam = _gram_solve(K, jac.labels, jitter)
    fla = max(float(jac.labels @ v), 0.0)
    eig_min, eig_max = _extreme_eigenvalues(K)
    overparam_ok = jac.p > jac.n_sub
    if not overparam_ok:
        logger.warning(
            f"⚠️ {jac.p} parameters for {jac.n_sub} examples: the Gram matrix is rank deficient"
        )
    return FlaReport(
        fla=fla,
        r=math.sqrt(fla),
        n_sub=jac.n_sub,
        p=jac.p,
        jitter=lam,
        eig_min=eig_min,
        eig_max=eig_max,
        overparam_ok=overparam_ok,
    )


def perturbation_norm(J, y=None, c: float = 1.0, jitter: float = 0.0, return_delta: bool = False):
    """
    ‖Δθ‖ of the minimum-norm solution of JΔθ = c·y, i.e. c·√fla.

    With return_delta the explicit Δθ = Jᵀ(JJᵀ)⁻¹·c·y is returned as well.
    """
    jac = _as_jacobian(J, y)
    v, _ = _gram_solve(jac.J @ jac.J.T, jac.labels, jitter)
    norm = abs(c) * math.sqrt(max(float(jac.labels @ v), 0.0))
    if return_delta:
        return norm, c * (jac.J.T @ v)
    return norm


def rho_for_activation(activation: str) -> float:
    return max(1.0, get_activation(activation).lipschitz)


def generalization_error(
    kind: str,
    layers: Optional[int] = None,
    rho: float = 1.0,
    tau: float = 1.0,
    r: float = 0.0,
    n: int = 1,
) -> GeScore:
    """
    ge = D·C·R/√N with the family's constants.

    gnn: C = ((1+3ρ)τ)^(L−1), D = L; rnn: C = (1+3ρ/√2)^(L−1), D = L;
    memory: C = ρ, D = 4; stone: gnn with L = 2, ρ = τ = 1.
    """
    if kind not in GE_KINDS:
        raise FlaError(f"unknown model family {kind!r}; choose from {GE_KINDS}")
    if n < 1:
        raise FlaError(f"N must be >= 1, got {n}")
    if kind == "stone":
        kind_layers, rho, tau = 2, 1.0, 1.0
    else:
        kind_layers = layers
    if rho < 1 or tau < 1:
        raise FlaError(f"rho and tau must be >= 1, got {rho}, {tau}")
    if kind in ("gnn", "rnn", "stone") and (kind_layers is None or kind_layers < 2):
        raise FlaError(f"{kind} needs L >= 2, got {kind_layers}")

    if kind in ("gnn", "stone"):
        c = ((1 + 3 * rho) * tau) ** (kind_layers - 1)
        d = float(kind_layers)
    elif kind == "rnn":
        c = (1 + 3 * rho / math.sqrt(2)) ** (kind_layers - 1)
        d = float(kind_layers)
    else:
        kind_layers = None
        c = float(rho)
        d = 4.0
    ge = d * c * r / math.sqrt(n)
    return GeScore(kind, kind_layers, float(rho), float(tau), float(c), d, float(r), int(n), ge)


def composite_generalization_error(
    parts: Sequence[GeScore], name: str = "composite"
) -> CompositeGe:
    """Product of component scores."""
    if not parts:
        raise FlaError("composite score needs at least one component")
    return CompositeGe(name, tuple(parts), float(np.prod([p.ge for p in parts])))


def preset_generalization_error(name: str, r: float, n: int) -> CompositeGe:
    """Score a published family at ρ = τ = 1."""
    try:
        components = COMPOSITE_PRESETS[name]
    except KeyError:
        choices = sorted(COMPOSITE_PRESETS)
        raise FlaError(f"unknown preset {name!r}; choose from {choices}") from None
    parts = [generalization_error(kind, layers, 1.0, 1.0, r, n) for kind, layers in components]
    return composite_generalization_error(parts, name)


def model_generalization_error(model_cfg, r: float, n: int, tau: float = 1.0) -> GeScore:
    """GE for a ModelConfig, with ρ taken from its activation."""
    rho = rho_for_activation(model_cfg.activation_name)
    if model_cfg.method == "stone":
        return generalization_error("stone", r=r, n=n)
    if model_cfg.method == "memory":
        return generalization_error("memory", rho=rho, r=r, n=n)
    return generalization_error(model_cfg.method, model_cfg.layers, rho, tau, r, n)


def generalization_gap(history) -> np.ndarray:
    """Per-epoch |train AP − validation AP|."""
    return np.abs(np.asarray(history.train_ap, dtype=np.float64) - np.asarray(history.val_ap))


def alpha_sum(model, params: Optional[ModelParams] = None) -> Optional[float]:
    """Σα of a SToNe model (its τ); None for models without aggregation weights."""
    params = params if params is not None else model.params
    if params is None or "stone.alpha" not in params:
        return None
    return float(np.sum(params["stone.alpha"]))


def spearman_ge_ap(rows: Union[pd.DataFrame, Iterable[dict]]) -> Tuple[float, float]:
    """Spearman rank correlation (and p-value) of GE against AP."""
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
    frame = frame.dropna(subset=["ge", "ap"])
    if len(frame) < 3:
        raise FlaError(f"need at least 3 (ge, ap) pairs, got {len(frame)}")
    result = spearmanr(frame["ge"], frame["ap"])
    return float(result[0]), float(result[1])


def fla_report_to_json(
    report: FlaReport, ge: GeScore, method: str, seed: int, path=None
) -> dict:
    """Flat record {method, seed, n_sub, p, fla, r, c, d, ge, jitter, overparam_ok}."""
    record = {
        "method": method,
        "seed": seed,
        "n_sub": report.n_sub,
        "p": report.p,
        "fla": report.fla,
        "r": report.r,
        "c": ge.c,
        "d": ge.d,
        "ge": ge.ge,
        "jitter": report.jitter,
        "overparam_ok": report.overparam_ok,
        "labels": report.labels,
    }
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(record, indent=2))
    return record


SCATTER_COLUMNS = ["method", "seed", "fla", "ge", "ap"]


def write_scatter_csv(rows: Iterable[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(list(rows))
    for col in SCATTER_COLUMNS:
        if col not in frame.columns:
            frame[col] = np.nan
    frame[SCATTER_COLUMNS + [c for c in frame.columns if c not in SCATTER_COLUMNS]].to_csv(
        path, index=False
    )
    return path
