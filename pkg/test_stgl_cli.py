"""
Tests for the stgl command line.
"""

import json
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from fla_analysis import spearman_ge_ap
from link_metrics import TRANSDUCTIVE
from link_training import TrainConfig
from param_checkpoint import load_checkpoint
from stgl_cli import (
    EXIT_OK,
    EXIT_USAGE,
    build_parser,
    main,
    run_ablation_cell,
    run_fla_cell,
    run_train_cell,
)
from stgl_config import FlaConfig, RunConfig
from synthetic_stream import generate_planted_stream
from temporal_graph import load_snapshot
from tgl_models import ModelConfig

TINY = ["--k", "3", "--hidden", "8", "--time-dim", "4", "--batch-size", "100"]


def run(out_dir, *argv):
    return main([*map(str, argv), "--out-dir", str(out_dir)])


def read_manifest(out_dir, command):
    return json.loads((out_dir / f"manifest_{command}.json").read_text())


@pytest.fixture
def synth_csv(tmp_path):
    csv = tmp_path / "data" / "planted.csv"
    args = ["--nodes", 30, "--edges", 300, "--seed", 1]
    assert run(tmp_path / "synth", "synth", "--out", csv, *args) == EXIT_OK
    return csv


@pytest.fixture
def snapshot(synth_csv, tmp_path):
    out = tmp_path / "data" / "planted.stgl"
    node_feats = synth_csv.with_name("planted_node_feats.csv")
    code = run(
        tmp_path / "ingest",
        "ingest",
        "--csv",
        synth_csv,
        "--node-feats",
        node_feats,
        "--out",
        out,
        "--no-cache",
    )
    assert code == EXIT_OK
    return out


def train(snapshot, out_dir, *extra):
    return run(out_dir, "train", "--snapshot", snapshot, "--seeds", 0, *extra, *TINY)


class TestParser:
    def test_unknown_method_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["train", "--method", "transformer"])
        assert exc.value.code == 2

    def test_command_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_seed_forms(self):
        args = build_parser().parse_args(["fla", "--seeds", "0..2"])
        assert args.seeds == (0, 1, 2)

    def test_flag_aliases(self):
        args = build_parser().parse_args(["train", "--graph-direction", "di", "--algorithm1"])
        assert args.direction == "di"
        assert args.online
        args = build_parser().parse_args(["train", "--direction", "bi", "--online"])
        assert args.direction == "bi"
        assert args.online


class TestSynthAndIngest:
    """Test writing and ingesting a planted stream."""

    def test_synth_outputs(self, synth_csv, tmp_path):
        assert synth_csv.exists()
        assert synth_csv.with_name("planted_node_feats.csv").exists()
        manifest = read_manifest(tmp_path / "synth", "synth")
        assert manifest["status"] == "done"
        assert manifest["outputs"]["csv"] == str(synth_csv)

    def test_ingest_outputs(self, snapshot, tmp_path):
        g = load_snapshot(snapshot)
        assert g.num_edges == 300
        assert g.node_feats.shape[1] == 8
        stats = json.loads(snapshot.with_suffix(".stats.json").read_text())
        assert stats["num_edges"] == 300
        assert stats["dataset_hash"] == g.dataset_hash()
        manifest = read_manifest(tmp_path / "ingest", "ingest")
        assert manifest["status"] == "done"
        assert manifest["dataset_hash"] == g.dataset_hash()

    def test_missing_csv(self, tmp_path):
        out_dir = tmp_path / "runs"
        code = run(out_dir, "ingest", "--csv", tmp_path / "missing.csv", "--no-cache")
        assert code == EXIT_USAGE
        manifest = read_manifest(out_dir, "ingest")
        assert manifest["status"] == "failed"
        assert "missing.csv" in manifest["error"]

    def test_ingest_without_csv(self, tmp_path):
        assert run(tmp_path, "ingest") == EXIT_USAGE


class TestTrainAndAnalyze:
    """Test the train, fla, eval and report commands end to end."""

    def test_train_writes_checkpoint_history_and_ledger(self, snapshot, tmp_path):
        out_dir = tmp_path / "runs"
        assert train(snapshot, out_dir, "--epochs", 1) == EXIT_OK
        ckpt = load_checkpoint(out_dir / "stone_seed0.ckpt")
        assert ckpt.model_config["method"] == "stone"
        assert ckpt.meta["seed"] == 0
        history = pd.read_csv(out_dir / "stone_seed0_history.csv")
        assert len(history) == 1
        ledger = pd.read_csv(out_dir / "ledger.csv")
        assert set(ledger["method"]) == {"stone"}
        assert "transductive" in set(ledger["setting"])
        assert read_manifest(out_dir, "train")["status"] == "done"

    def test_train_online_sgd(self, snapshot, tmp_path):
        out_dir = tmp_path / "online"
        assert train(snapshot, out_dir, "--online", "--n", 10) == EXIT_OK
        losses = pd.read_csv(out_dir / "stone_online_seed0_losses.csv")
        assert len(losses) == 10
        assert read_manifest(out_dir, "train")["status"] == "done"

    def test_train_algorithm1_alias(self, snapshot, tmp_path):
        out_dir = tmp_path / "online"
        assert train(snapshot, out_dir, "--algorithm1", "--n", 5) == EXIT_OK
        losses = pd.read_csv(out_dir / "stone_online_seed0_losses.csv")
        assert len(losses) == 5

    def test_train_directed_graph(self, snapshot, tmp_path):
        out_dir = tmp_path / "runs"
        code = train(snapshot, out_dir, "--epochs", 1, "--graph-direction", "di")
        assert code == EXIT_OK
        ckpt = load_checkpoint(out_dir / "stone_seed0.ckpt")
        assert ckpt.model_config["direction"] == "di"

    def test_fla_then_report(self, snapshot, tmp_path):
        out_dir = tmp_path / "runs"
        fla_args = ["--snapshot", snapshot, "--nsub", 6, "--seeds", "0,1"]
        assert run(out_dir, "fla", *fla_args, *TINY) == EXIT_OK
        record = json.loads((out_dir / "stone_fla_seed0.json").read_text())
        assert record["n_sub"] == 6
        assert record["r"] == pytest.approx(record["fla"] ** 0.5)
        scatter = pd.read_csv(out_dir / "scatter.csv")
        assert sorted(scatter["seed"]) == [0, 1]

        summary = tmp_path / "summary.json"
        code = run(out_dir, "report", "--scatter", out_dir / "scatter.csv", "--out", summary)
        assert code == EXIT_OK
        assert summary.exists()

    def test_eval_checkpoint(self, snapshot, tmp_path):
        out_dir = tmp_path / "runs"
        assert train(snapshot, out_dir, "--epochs", 1, "--no-eval") == EXIT_OK
        assert not (out_dir / "ledger.csv").exists()
        ckpt = out_dir / "stone_seed0.ckpt"
        code = run(
            out_dir,
            "eval",
            "--snapshot",
            snapshot,
            "--checkpoint",
            ckpt,
            "--setting",
            "transductive",
        )
        assert code == EXIT_OK
        assert (out_dir / "stone_seed0_transductive.json").exists()
        assert (out_dir / "ledger.csv").exists()

    def test_single_cell_ablation(self, snapshot, tmp_path):
        out_dir = tmp_path / "ablate"
        code = run(
            out_dir,
            "ablate",
            "--snapshot",
            snapshot,
            "--inputs",
            "uniform-1hop",
            "--directions",
            "di",
            "--alphas",
            "fixed",
            "--seeds",
            0,
            "--epochs",
            1,
            "--nsub",
            6,
            *TINY,
        )
        assert code == EXIT_OK
        ledger = pd.read_csv(out_dir / "ablation.csv")
        assert len(ledger) == 1
        expected = {"cell", "input", "direction", "alpha", "seed", "fla", "ge", "ap", "auc", "mrr"}
        assert expected <= set(ledger.columns)
        row = ledger.iloc[0]
        assert row["cell"] == "uniform-1hop_di_fixed"
        assert row["fla"] > 0
        assert 0.0 <= row["ap"] <= 1.0
        assert (out_dir / "stone_uniform-1hop_di_fixed_seed0.ckpt").exists()
        assert read_manifest(out_dir, "ablate")["status"] == "done"

    def test_empty_ablation_grid(self, snapshot, tmp_path):
        code = run(tmp_path, "ablate", "--snapshot", snapshot, "--inputs", *TINY)
        assert code == EXIT_USAGE

    def test_report_needs_inputs(self, tmp_path):
        assert run(tmp_path, "report") == EXIT_USAGE


class TestCacheCommand:
    def test_stats_and_clear(self, tmp_path, capsys):
        cache_dir = tmp_path / "cache"
        assert run(tmp_path, "cache", "stats", "--cache-dir", cache_dir) == EXIT_OK
        assert "No snapshots currently cached" in capsys.readouterr().out
        assert run(tmp_path, "cache", "clear", "--cache-dir", cache_dir) == EXIT_OK
        # cache commands leave no manifest behind
        assert not (tmp_path / "manifest_cache.json").exists()


PLANTED_SEEDS = range(6)
PLANTED_FAMILIES = [
    {"method": "stone"},
    {"method": "gnn", "layers": 3},
    {"method": "rnn", "layers": 4},
    {"method": "memory"},
]


@pytest.fixture(scope="module")
def planted_stream():
    return generate_planted_stream(num_nodes=50, num_edges=1500, repeat_prob=0.8, seed=0)


def planted_config(**model) -> RunConfig:
    return RunConfig(
        model=ModelConfig(k=5, hidden=16, time_dim=8, **model),
        train=TrainConfig(lr=1e-3, batch_size=100, max_epochs=10, patience=5),
        fla=FlaConfig(n_sub=200),
    )


@pytest.mark.slow
class TestPlantedRecency:
    """Test GE and FLA against trained AP on the planted-recency stream."""

    def test_ge_falls_as_ap_rises(self, planted_stream, tmp_path):
        rows = []
        for family in PLANTED_FAMILIES:
            cfg = planted_config(**family)
            for seed in PLANTED_SEEDS:
                trained = run_train_cell(cfg, planted_stream, seed, str(tmp_path), "planted")
                fla = run_fla_cell(cfg, planted_stream, seed)
                ap = trained["reports"][TRANSDUCTIVE]["ap"]
                rows.append({"method": family["method"], "ge": fla["ge"], "ap": ap})
        assert len(rows) == 24
        rho, _ = spearman_ge_ap(rows)
        assert rho < 0

    def test_uniform_or_directed_inputs_raise_fla(self, planted_stream, tmp_path):
        base = planted_config(method="stone")

        def cell_means(**change):
            cfg = replace(base, model=replace(base.model, **change))
            tag = "_".join(f"{v}" for v in change.values()) or "base"
            rows = [
                run_ablation_cell(cfg, planted_stream, seed, str(tmp_path), "planted", {"cell": tag})
                for seed in PLANTED_SEEDS
            ]
            return np.mean([r["fla"] for r in rows]), np.mean([r["ap"] for r in rows])

        base_fla, base_ap = cell_means()
        for change in ({"sampling": "uniform"}, {"direction": "di"}):
            fla, ap = cell_means(**change)
            assert fla > base_fla, change
            assert ap <= base_ap, change
