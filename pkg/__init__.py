"""
stgl

Simplified temporal graph learning: temporal neighbor sampling, the SToNe,
GNN, RNN and memory model families with hand-derived gradients, link
prediction training and evaluation, and feature-label alignment /
generalization-error analysis.
"""

from .fla_analysis import (
    compute_fla,
    compute_jacobian,
    fla_examples,
    generalization_error,
    generalization_gap,
    perturbation_norm,
)
from .link_metrics import auc_roc, average_precision, evaluate, rank_metrics
from .link_training import TrainConfig, online_sgd, train_link_prediction
from .neighbor_sampling import recent_neighbors, recent_two_hop, uniform_neighbors
from .temporal_graph import (
    StglError,
    TemporalGraph,
    chronological_split,
    from_arrays,
    ingest_csv,
    normalize_features,
)
from .tgl_models import ModelConfig, build_model

__version__ = "0.1.0"
__all__ = [
    "StglError",
    "TemporalGraph",
    "from_arrays",
    "ingest_csv",
    "normalize_features",
    "chronological_split",
    "recent_neighbors",
    "uniform_neighbors",
    "recent_two_hop",
    "ModelConfig",
    "build_model",
    "TrainConfig",
    "train_link_prediction",
    "online_sgd",
    "average_precision",
    "auc_roc",
    "rank_metrics",
    "evaluate",
    "compute_jacobian",
    "compute_fla",
    "fla_examples",
    "generalization_error",
    "generalization_gap",
    "perturbation_norm",
]
