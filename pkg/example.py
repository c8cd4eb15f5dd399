#!/usr/bin/env python3
"""
Example usage of the stgl library
"""

import numpy as np

from fla_analysis import (
    compute_fla,
    compute_jacobian,
    fla_examples,
    model_generalization_error,
)
from link_metrics import evaluate
from link_training import TrainConfig, seed_streams, train_link_prediction
from neighbor_sampling import recent_neighbors
from synthetic_stream import generate_planted_stream
from temporal_graph import chronological_split, from_arrays, graph_stats
from tgl_models import ModelConfig, build_model


def example_temporal_neighbors():
    """Example: recent neighbors on a six-interaction graph"""
    print("=" * 60)
    print("Example 1: Temporal neighbors")
    print("=" * 60)

    # (1,2) at t1, (1,3) at t2, (2,4) at t3, (4,2) at t4, (3,5) at t5, (5,4) at t6
    g = from_arrays(
        src=[1, 1, 2, 4, 3, 5],
        dst=[2, 3, 4, 2, 5, 4],
        ts=[1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
    )
    nb = recent_neighbors(g, 4, 7.0, 3)
    print("\n📋 Three most recent neighbors of node 4 before t=7:")
    for node, t in nb.pairs():
        print(f"  • node {node} at t={t:g}")


def example_train_and_evaluate():
    """Example: train SToNe on a planted-recency stream"""
    print("\n" + "=" * 60)
    print("Example 2: Training and evaluation")
    print("=" * 60)

    g = generate_planted_stream(num_nodes=50, num_edges=600, repeat_prob=0.8, seed=0)
    stats = graph_stats(g)
    print(f"\n📊 {stats.num_nodes} nodes, {stats.num_edges} interactions")

    split = chronological_split(g)
    cfg = ModelConfig(method="stone", k=10, hidden=32, time_dim=16)
    _, _, sampling_rng = seed_streams(0)
    model = build_model(cfg, g, sampling_rng)
    result = train_link_prediction(
        model, g, split, TrainConfig(lr=1e-3, batch_size=100, max_epochs=5, patience=3)
    )
    print(f"\n📈 Best epoch {result.best_epoch} of {len(result.history)}")

    report = evaluate(model, g, split, "transductive", seed=0)
    print(f"✅ Test AP={report.ap:.4f}, AUC={report.auc:.4f}, MRR={report.mrr:.4f}")


def example_feature_label_alignment():
    """Example: FLA and GE of an untrained model"""
    print("\n" + "=" * 60)
    print("Example 3: Feature-label alignment")
    print("=" * 60)

    g = generate_planted_stream(num_nodes=50, num_edges=600, repeat_prob=0.8, seed=1)
    split = chronological_split(g)
    cfg = ModelConfig(method="stone", k=10, hidden=32, time_dim=16)
    init_rng, neg_rng, sampling_rng = seed_streams(0)
    model = build_model(cfg, g, sampling_rng)
    params = model.init_params(init_rng, m=cfg.hidden, dtype=np.float64)

    examples = fla_examples(g, split, n_sub=200, rng=neg_rng)
    report = compute_fla(compute_jacobian(model, examples, g, params))
    ge = model_generalization_error(cfg, report.r, report.n_sub)
    print(f"\n🧮 FLA={report.fla:.4f}, R={report.r:.4f}, GE={ge.ge:.4f}")
    print(f"   {report.p:,} parameters for {report.n_sub} examples")


def main():
    """Run all examples"""
    print("🚀 stgl - Usage Examples\n")
    example_temporal_neighbors()
    example_train_and_evaluate()
    example_feature_label_alignment()
    print("\n✅ All examples completed!")


if __name__ == "__main__":
    main()
