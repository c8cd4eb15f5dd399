#!/usr/bin/env python3
"""
stgl command-line interface

Wires ingestion, training, evaluation, FLA/GE analysis and ablations into
reproducible runs. Commands that produce artifacts write a JSON run
manifest next to them.

Exit codes: 0 success, 1 runtime failure, 2 usage or input validation.
"""

import argparse
import json
import logging
import subprocess  # nosec B404
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from fla_analysis import (
    FlaError,
    alpha_sum,
    compute_fla,
    compute_jacobian,
    fla_examples,
    fla_report_to_json,
    model_generalization_error,
    spearman_ge_ap,
    write_scatter_csv,
)
from link_metrics import (
    SETTINGS,
    TRANSDUCTIVE,
    MetricError,
    MetricsReport,
    append_run_ledger,
    evaluate,
)
from link_training import (
    TrainingError,
    history_from_csv,
    history_to_csv,
    link_example_stream,
    online_sgd,
    seed_streams,
    train_link_prediction,
)
from param_checkpoint import check_compatible, load_checkpoint, save_checkpoint
from snapshot_cache import SnapshotCache, cached_ingest
from stgl_config import (
    ConfigError,
    RunConfig,
    load_config,
    parse_seeds,
    resolve_data_path,
    with_overrides,
)
from synthetic_stream import generate_planted_stream
from temporal_graph import (
    CsvSchema,
    StglError,
    TemporalGraph,
    chronological_split,
    graph_stats,
    load_snapshot,
    save_snapshot,
    to_csv,
)
from tgl_models import METHODS, ModelConfig, build_model

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# failures that happen while running rather than while reading input
RUNTIME_ERRORS = (TrainingError, FlaError, MetricError)

ABLATION_INPUTS = {
    "recent-1hop": {"sampling": "recent", "hops": 1},
    "recent-2hop": {"sampling": "recent", "hops": 2},
    "uniform-1hop": {"sampling": "uniform", "hops": 1},
}
ABLATION_DIRECTIONS = ("bi", "di")
ABLATION_ALPHAS = ("trainable", "fixed")
ABLATION_K2 = 5
MANIFEST_COMMANDS = ("ingest", "train", "eval", "fla", "ablate", "synth")


def build_id() -> str:
    """Short git hash of the working tree, or "unknown"."""
    try:
        out = subprocess.run(  # nosec B603 B607
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True,
            text=True,
            timeout=5,
            check=False,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


@dataclass
class RunManifest:
    """JSON record of one command: inputs, outputs and timings."""

    command: str
    config: Dict[str, Any]
    seeds: List[int] = field(default_factory=list)
    dataset_hash: Optional[str] = None
    build_id: str = "unknown"
    status: str = "running"
    outputs: Dict[str, Any] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    started_at: str = field(default_factory=lambda: datetime.now().isoformat())
    finished_at: Optional[str] = None
    error: Optional[str] = None

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=2, default=str))
        return path

    def add_output(self, name: str, value):
        self.outputs[name] = str(value) if isinstance(value, Path) else value

    def finalize(self, path, status: str, error: Optional[str] = None) -> Path:
        self.status = status
        self.error = error
        self.finished_at = datetime.now().isoformat()
        return self.write(path)


# ---------------------------------------------------------------- helpers


def _load_graph(cfg: RunConfig, use_cache: bool = True) -> TemporalGraph:
    data = cfg.data
    if data.snapshot:
        return load_snapshot(resolve_data_path(data.snapshot))
    if data.csv:
        schema = CsvSchema.jodie() if data.schema == "jodie" else CsvSchema()
        node_feats = resolve_data_path(data.node_feats) if data.node_feats else None
        cache = SnapshotCache() if use_cache else None
        return cached_ingest(
            resolve_data_path(data.csv), schema, node_feats, data.normalize, cache
        )
    raise ConfigError("no dataset given: use --snapshot or --csv (or [data] in the config)")


def _run_cells(fn: Callable, cells: Sequence[dict], jobs: int, show_progress: bool) -> List:
    """Run independent cells, sequentially or on a process pool; results keep input order."""
    if jobs <= 1 or len(cells) <= 1:
        iterator = tqdm(cells, desc="Runs", unit="run") if show_progress else cells
        return [fn(**cell) for cell in iterator]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, **cell) for cell in cells]
        iterator = tqdm(futures, desc="Runs", unit="run") if show_progress else futures
        return [f.result() for f in iterator]


def _cell_name(method: str, seed: int, tag: str = "") -> str:
    return f"{method}{'_' + tag if tag else ''}_seed{seed}"


def run_train_cell(
    cfg: RunConfig,
    g: TemporalGraph,
    seed: int,
    out_dir: str,
    dataset: str,
    tag: str = "",
    evaluate_after: bool = True,
) -> Dict[str, Any]:
    """Train one (config, seed) cell, write its checkpoint and history, evaluate it."""
    out = Path(out_dir)
    split = chronological_split(g, cfg.data.ratios)
    init_rng, _, sampling_rng = seed_streams(seed)
    train_cfg = replace(cfg.train, seed=seed, show_progress=False)
    model = build_model(cfg.model, g, sampling_rng)
    model.init_params(init_rng, m=cfg.model.hidden, dtype=np.dtype(train_cfg.dtype))
    alpha_before = alpha_sum(model)
    started = time.perf_counter()
    result = train_link_prediction(model, g, split, train_cfg)
    train_seconds = time.perf_counter() - started
    alpha_after = alpha_sum(model, result.params)

    name = _cell_name(cfg.model.method, seed, tag)
    meta = {
        "seed": seed,
        "dataset": dataset,
        "dataset_hash": g.dataset_hash(),
        "best_epoch": result.best_epoch,
        "alpha_sum_before": alpha_before,
        "alpha_sum_after": alpha_after,
        "ratios": list(cfg.data.ratios),
    }
    ckpt = save_checkpoint(out / f"{name}.ckpt", result.params, cfg.model.to_dict(), meta)
    history = history_to_csv(result.history, out / f"{name}_history.csv")
    record = {
        "seed": seed,
        "name": name,
        "checkpoint": str(ckpt),
        "history": str(history),
        "best_epoch": result.best_epoch,
        "epochs": len(result.history),
        "alpha_sum_before": alpha_before,
        "alpha_sum_after": alpha_after,
        "param_count": result.params.count,
        "seconds": train_seconds,
        "seconds_per_epoch": float(np.mean(result.history.seconds)) if len(result.history) else 0.0,
        "reports": {},
    }
    if evaluate_after:
        for setting in SETTINGS:
            try:
                report = evaluate(model, g, split, setting, seed=seed, params=result.params)
            except MetricError as e:
                logger.warning(f"⚠️ Skipping {setting} evaluation for {name}: {e}")
                continue
            record["reports"][setting] = report.to_dict()
    return record


def run_fla_cell(
    cfg: RunConfig, g: TemporalGraph, seed: int, show_progress: bool = False
) -> Dict[str, Any]:
    """FLA and GE at the seed's initial parameters."""
    split = chronological_split(g, cfg.data.ratios)
    init_rng, neg_rng, sampling_rng = seed_streams(seed)
    model = build_model(cfg.model, g, sampling_rng)
    params = model.init_params(init_rng, m=cfg.model.hidden, dtype=np.float64)
    _, train_end = split.train_range
    n_sub = min(cfg.fla.n_sub, train_end)
    examples = fla_examples(g, split, n_sub, neg_rng)
    jac = compute_jacobian(
        model,
        examples,
        g,
        params,
        chunk=cfg.fla.chunk,
        batch_size=cfg.train.batch_size,
        show_progress=show_progress,
    )
    report = compute_fla(jac, jitter=cfg.fla.jitter)
    ge = model_generalization_error(cfg.model, report.r, report.n_sub, tau=cfg.fla.tau)
    record = fla_report_to_json(report, ge, cfg.model.method, seed)
    record["alpha_sum"] = alpha_sum(model, params)
    return record


def run_ablation_cell(
    cfg: RunConfig, g: TemporalGraph, seed: int, out_dir: str, dataset: str, cell: Dict[str, str]
) -> Dict[str, Any]:
    trained = run_train_cell(cfg, g, seed, out_dir, dataset, tag=cell["cell"])
    fla = run_fla_cell(cfg, g, seed)
    row = dict(cell)
    row["seed"] = seed
    row["fla"] = fla["fla"]
    row["ge"] = fla["ge"]
    transductive = trained["reports"].get(TRANSDUCTIVE, {})
    row["ap"] = transductive.get("ap", float("nan"))
    row["auc"] = transductive.get("auc", float("nan"))
    row["mrr"] = transductive.get("mrr", float("nan"))
    row["alpha_sum_after"] = trained["alpha_sum_after"]
    return row


def _ledger_report(record: dict, setting: str) -> MetricsReport:
    return MetricsReport.from_dict(record["reports"][setting])


# --------------------------------------------------------------- printing


def print_graph_stats(stats: Dict[str, Any], title: str = "DATASET STATISTICS"):
    print(f"\n📊 {title}")
    print("=" * 50)
    print(f"   • Nodes: {stats['num_nodes']:,}")
    print(f"   • Interactions: {stats['num_edges']:,}")
    print(f"   • Average time gap: {stats['avg_time_gap']:.4g}")
    print(f"   • Node features: {stats['d_n']} dims")
    print(f"   • Edge features: {stats['d_e']} dims")


def print_metrics(name: str, report: Dict[str, Any]):
    recall = report.get("recall_at", {})
    print(
        f"   ✅ {name} [{report['setting']}]: AP={report['ap']:.4f} AUC={report['auc']:.4f} "
        f"R@1={recall.get('1', float('nan')):.4f} R@5={recall.get('5', float('nan')):.4f} "
        f"MRR={report['mrr']:.4f} (n={report['n_eval']:,})"
    )


def print_fla_record(record: Dict[str, Any]):
    flag = "✅" if record["overparam_ok"] else "⚠️ "
    print(
        f"   {flag} {record['method']} seed {record['seed']}: FLA={record['fla']:.4g} "
        f"R={record['r']:.4g} GE={record['ge']:.4g} (N={record['n_sub']}, P={record['p']:,}, "
        f"jitter={record['jitter']:.2g})"
    )


def _mean_std_table(frame: pd.DataFrame, keys: List[str], metrics: List[str]) -> pd.DataFrame:
    grouped = frame.groupby(keys)[metrics]
    mean = grouped.mean()
    std = grouped.std(ddof=0).fillna(0.0)
    table = pd.DataFrame(index=mean.index)
    for col in metrics:
        table[col] = [f"{m:.4f} ± {s:.4f}" for m, s in zip(mean[col], std[col])]
    table["runs"] = grouped.size()
    return table


# --------------------------------------------------------------- commands


def cmd_ingest(args, cfg: RunConfig, manifest: RunManifest) -> int:
    if not cfg.data.csv:
        raise ConfigError("ingest needs --csv")
    g = _load_graph(cfg, use_cache=not args.no_cache)
    split = chronological_split(g, cfg.data.ratios)
    out = Path(args.out) if args.out else Path(cfg.data.csv).with_suffix(".stgl")
    save_snapshot(g, out)
    stats = graph_stats(g).to_dict()
    stats["dataset_hash"] = g.dataset_hash()
    stats["resorted"] = g.resorted
    stats["normalized"] = cfg.data.normalize
    stats["split"] = {
        "train": list(split.train_range),
        "val": list(split.val_range),
        "test": list(split.test_range),
        "inductive_nodes": len(split.inductive_nodes),
        "warnings": list(split.warnings),
    }
    stats_path = out.with_suffix(".stats.json")
    stats_path.write_text(json.dumps(stats, indent=2))
    manifest.dataset_hash = g.dataset_hash()
    manifest.add_output("snapshot", out)
    manifest.add_output("stats", stats_path)
    print_graph_stats(stats)
    print(f"\n💾 Snapshot written to: {out}")
    return EXIT_OK


def _train_online(args, cfg: RunConfig, g: TemporalGraph, manifest: RunManifest, out: Path):
    split = chronological_split(g, cfg.data.ratios)
    print(f"\n🎲 Online SGD (one example per step) for {args.n} steps, η={args.eta}")
    for seed in cfg.seeds:
        init_rng, neg_rng, sampling_rng = seed_streams(seed)
        model = build_model(cfg.model, g, sampling_rng)
        model.init_params(init_rng, m=cfg.model.hidden, dtype=np.float64)
        if model.stateful:
            model.reset_state()
        result = online_sgd(
            model, link_example_stream(g, split, neg_rng), args.eta, args.n, rng=init_rng
        )
        name = _cell_name(cfg.model.method, seed, "online")
        ckpt = save_checkpoint(
            out / f"{name}.ckpt",
            result.theta_tilde,
            cfg.model.to_dict(),
            {"seed": seed, "iterate": result.index, "steps": args.n, "eta": args.eta},
        )
        losses = out / f"{name}_losses.csv"
        pd.DataFrame({"step": np.arange(args.n), "loss": result.losses}).to_csv(losses, index=False)
        manifest.add_output(name, {"checkpoint": str(ckpt), "losses": str(losses)})
        print(
            f"   ✅ seed {seed}: returned iterate {result.index}, "
            f"mean loss {float(np.mean(result.losses)):.4f}"
        )
    return EXIT_OK


def cmd_train(args, cfg: RunConfig, manifest: RunManifest) -> int:
    g = _load_graph(cfg, use_cache=not args.no_cache)
    manifest.dataset_hash = g.dataset_hash()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.online:
        return _train_online(args, cfg, g, manifest, out)

    dataset = cfg.data.dataset_name
    print(f"\n🚀 Training {cfg.model.method} on {dataset} for seeds {list(cfg.seeds)}")
    cells = [
        {
            "cfg": cfg,
            "g": g,
            "seed": s,
            "out_dir": str(out),
            "dataset": dataset,
            "evaluate_after": not args.no_eval,
        }
        for s in cfg.seeds
    ]
    records = _run_cells(run_train_cell, cells, args.jobs, cfg.train.show_progress)
    ledger = out / "ledger.csv"
    for record in records:
        outputs = {"checkpoint": record["checkpoint"], "history": record["history"]}
        manifest.add_output(record["name"], outputs)
        print(
            f"\n📈 {record['name']}: {record['epochs']} epochs, "
            f"best epoch {record['best_epoch']}, "
            f"{record['seconds_per_epoch']:.1f}s/epoch"
        )
        if record["alpha_sum_before"] is not None:
            print(f"   Σα: {record['alpha_sum_before']:.4f} → {record['alpha_sum_after']:.4f}")
        for setting, report in record["reports"].items():
            print_metrics(record["name"], report)
            row = _ledger_report(record, setting)
            append_run_ledger(ledger, cfg.model.method, dataset, record["seed"], row)
    if any(r["reports"] for r in records):
        manifest.add_output("ledger", ledger)
    return EXIT_OK


def cmd_eval(args, cfg: RunConfig, manifest: RunManifest) -> int:
    g = _load_graph(cfg, use_cache=not args.no_cache)
    manifest.dataset_hash = g.dataset_hash()
    split = chronological_split(g, cfg.data.ratios)
    settings = list(SETTINGS) if args.setting == "both" else [args.setting]
    out = Path(args.out_dir)
    ledger = out / "ledger.csv"
    dataset = cfg.data.dataset_name
    print(f"\n🔎 Evaluating {len(args.checkpoint)} checkpoint(s) on {dataset}")
    for path in args.checkpoint:
        ckpt = load_checkpoint(path)
        model_cfg = ModelConfig(**ckpt.model_config) if ckpt.model_config else cfg.model
        seed = int(ckpt.meta.get("seed", 0))
        _, _, sampling_rng = seed_streams(seed)
        model = build_model(model_cfg, g, sampling_rng)
        check_compatible(ckpt.params, model)
        model.params = ckpt.params
        for setting in settings:
            report = evaluate(model, g, split, setting, seed=seed, n_rank_negatives=args.negatives)
            report_path = out / f"{Path(path).stem}_{setting}.json"
            report_path.parent.mkdir(parents=True, exist_ok=True)
            report_path.write_text(report.to_json())
            append_run_ledger(ledger, model_cfg.method, dataset, seed, report)
            manifest.add_output(f"{Path(path).stem}_{setting}", report_path)
            print_metrics(Path(path).stem, report.to_dict())
    manifest.add_output("ledger", ledger)
    return EXIT_OK


def _ap_lookup(ledger_path: Path, method: str, dataset: str) -> Dict[int, float]:
    if not ledger_path.exists():
        return {}
    frame = pd.read_csv(ledger_path)
    frame = frame[
        (frame["method"] == method)
        & (frame["dataset"] == dataset)
        & (frame["setting"] == TRANSDUCTIVE)
    ]
    # latest row wins for repeated evaluations
    return {int(row.seed): float(row.ap) for row in frame.itertuples(index=False)}


def cmd_fla(args, cfg: RunConfig, manifest: RunManifest) -> int:
    g = _load_graph(cfg, use_cache=not args.no_cache)
    manifest.dataset_hash = g.dataset_hash()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = cfg.data.dataset_name
    print(f"\n🧮 FLA/GE for {cfg.model.method} on {dataset}, seeds {list(cfg.seeds)}")
    cells = [{"cfg": cfg, "g": g, "seed": s} for s in cfg.seeds]
    records = _run_cells(run_fla_cell, cells, args.jobs, cfg.train.show_progress)
    ledger = Path(args.ledger) if args.ledger else out / "ledger.csv"
    ap_by_seed = _ap_lookup(ledger, cfg.model.method, dataset)
    rows = []
    for record in records:
        name = _cell_name(cfg.model.method, record["seed"], "fla")
        path = out / f"{name}.json"
        path.write_text(json.dumps(record, indent=2))
        manifest.add_output(name, path)
        print_fla_record(record)
        rows.append(
            {
                "method": record["method"],
                "seed": record["seed"],
                "fla": record["fla"],
                "ge": record["ge"],
                "ap": ap_by_seed.get(record["seed"], float("nan")),
            }
        )
    scatter = out / "scatter.csv"
    if scatter.exists():
        previous = pd.read_csv(scatter)
        previous = previous[previous["method"] != cfg.model.method]
        rows = previous.to_dict("records") + rows
    write_scatter_csv(rows, scatter)
    manifest.add_output("scatter", scatter)
    print(f"\n💾 GE/AP scatter written to: {scatter}")
    return EXIT_OK


def _selected(values: Optional[List[str]], default: Sequence[str], what: str) -> List[str]:
    chosen = list(default) if values is None else values
    if not chosen:
        raise ConfigError(f"empty ablation grid: no {what} selected")
    return chosen


def cmd_ablate(args, cfg: RunConfig, manifest: RunManifest) -> int:
    inputs = _selected(args.inputs, ABLATION_INPUTS, "input selection")
    directions = _selected(args.directions, ABLATION_DIRECTIONS, "direction")
    alphas = _selected(args.alphas, ABLATION_ALPHAS, "alpha mode")
    g = _load_graph(cfg, use_cache=not args.no_cache)
    manifest.dataset_hash = g.dataset_hash()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = cfg.data.dataset_name

    cells = []
    for inp in inputs:
        for direction in directions:
            for alpha in alphas:
                settings = dict(ABLATION_INPUTS[inp])
                if settings["hops"] == 2 and cfg.model.k2 is None:
                    settings["k2"] = ABLATION_K2
                model_cfg = replace(
                    cfg.model,
                    method="stone",
                    direction=direction,
                    fixed_alpha=alpha == "fixed",
                    **settings,
                )
                cell = {
                    "cell": f"{inp}_{direction}_{alpha}",
                    "input": inp,
                    "direction": direction,
                    "alpha": alpha,
                }
                for seed in cfg.seeds:
                    cells.append(
                        {
                            "cfg": replace(cfg, model=model_cfg),
                            "g": g,
                            "seed": seed,
                            "out_dir": str(out),
                            "dataset": dataset,
                            "cell": cell,
                        }
                    )
    print(f"\n🧪 Ablation grid: {len(cells) // len(cfg.seeds)} cells × {len(cfg.seeds)} seeds")
    rows = _run_cells(run_ablation_cell, cells, args.jobs, cfg.train.show_progress)
    ledger = out / "ablation.csv"
    frame = pd.DataFrame(rows)
    frame.to_csv(ledger, index=False)
    manifest.add_output("ablation", ledger)
    table = _mean_std_table(frame, ["cell"], ["fla", "ap"])
    print("\n📋 ABLATION SUMMARY")
    print(table.to_string())
    print(f"\n💾 Ablation ledger written to: {ledger}")
    return EXIT_OK


def cmd_report(args, cfg: RunConfig, manifest: RunManifest) -> int:
    if not (args.ledger or args.scatter or args.history or args.snapshot or args.checkpoint):
        raise ConfigError(
            "report needs at least one of --ledger, --scatter, --history, --snapshot, --checkpoint"
        )
    summary: Dict[str, Any] = {}

    for path in args.snapshot or []:
        stats = graph_stats(load_snapshot(resolve_data_path(path))).to_dict()
        summary.setdefault("datasets", {})[str(path)] = stats
        print_graph_stats(stats, f"DATASET {Path(path).stem}")

    if args.ledger:
        frame = pd.concat([pd.read_csv(p) for p in args.ledger], ignore_index=True)
        keys = ["method", "dataset", "setting"]
        table = _mean_std_table(frame, keys, ["ap", "auc", "r1", "r5", "mrr"])
        summary["ledger"] = table.reset_index().to_dict("records")
        print("\n📈 LINK PREDICTION (mean ± std over seeds)")
        print(table.to_string())

    if args.scatter:
        frame = pd.concat([pd.read_csv(p) for p in args.scatter], ignore_index=True)
        table = _mean_std_table(frame, ["method"], ["ge", "fla", "ap"])
        print("\n🧮 GENERALIZATION ERROR vs AP")
        print(table.to_string())
        try:
            rho, pvalue = spearman_ge_ap(frame)
            summary["spearman"] = {"rho": rho, "pvalue": pvalue}
            print(f"\n   Spearman ρ(GE, AP) = {rho:.3f} (p={pvalue:.3g})")
        except FlaError as e:
            print(f"\n   ⚠️  Spearman correlation skipped: {e}")

    for path in args.history or []:
        history = history_from_csv(path)
        gap = np.abs(np.asarray(history.train_ap) - np.asarray(history.val_ap))
        info = {
            "epochs": len(history),
            "best_val_ap": float(np.max(history.val_ap)) if len(history) else float("nan"),
            "final_gap": float(gap[-1]) if gap.size else float("nan"),
            "seconds_per_epoch": float(np.mean(history.seconds)) if len(history) else 0.0,
        }
        summary.setdefault("histories", {})[str(path)] = info
        print(
            f"\n📉 {Path(path).stem}: {info['epochs']} epochs, "
            f"best val AP {info['best_val_ap']:.4f}, "
            f"final gap {info['final_gap']:.4f}, {info['seconds_per_epoch']:.2f}s/epoch"
        )

    for path in args.checkpoint or []:
        ckpt = load_checkpoint(path)
        info = {"method": ckpt.model_config.get("method", "?"), "param_count": ckpt.params.count}
        summary.setdefault("models", {})[str(path)] = info
        print(
            f"\n🔧 {Path(path).stem}: {info['method']} with "
            f"{info['param_count']:,} trainable parameters"
        )

    if args.out:
        Path(args.out).write_text(json.dumps(summary, indent=2, default=str))
        manifest.add_output("summary", args.out)
        print(f"\n💾 Summary written to: {args.out}")
    return EXIT_OK


def print_cache_stats(stats: Dict[str, Any]):
    print("\n📊 CACHE STATISTICS")
    print("=" * 50)
    print(f"Cache directory: {stats['cache_dir']}")
    print(f"Cache TTL: {stats['ttl_days']} days")
    print(f"Total cached snapshots: {stats['total_snapshots']}")
    print(f"Total cache size: {stats['total_size_mb']} MB")
    if stats["snapshots"]:
        print("\n📋 CACHED SNAPSHOTS:")
        for key, info in stats["snapshots"].items():
            print(
                f"  • {key}: {info['num_edges']:,} interactions, {info['num_nodes']:,} nodes "
                f"(cached: {info['cached_at'][:10]}, source: {info.get('source')})"
            )
    else:
        print("\n📭 No snapshots currently cached")


def cmd_cache(args, cfg: RunConfig, manifest: RunManifest) -> int:
    cache = SnapshotCache(cache_dir=args.cache_dir, cache_ttl_days=args.cache_ttl_days)
    if args.action == "stats":
        print_cache_stats(cache.get_cache_stats())
    elif args.action == "clear":
        if args.key:
            print(f"Clearing cache entry {args.key}...")
        else:
            print("Clearing all cache...")
        cache.clear_cache(args.key)
    elif args.action == "cleanup":
        print("Cleaning up expired cache entries...")
        cleaned = cache.cleanup_expired()
        if cleaned:
            print(f"✅ Cleaned up {cleaned} expired entries")
        else:
            print("✅ No expired entries found")
    else:
        print(f"Cache directory: {cache.cache_dir}")
        print(f"Cache TTL: {cache.cache_ttl_days} days")
    return EXIT_OK


def cmd_synth(args, cfg: RunConfig, manifest: RunManifest) -> int:
    g = generate_planted_stream(
        args.nodes, args.edges, args.repeat_prob, args.seed, d_e=args.d_e, d_n=args.d_n
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    node_feats = out.with_name(out.stem + "_node_feats.csv") if args.d_n else None
    to_csv(g, out, node_feats)
    manifest.dataset_hash = g.dataset_hash()
    manifest.add_output("csv", out)
    if node_feats is not None:
        manifest.add_output("node_feats", node_feats)
    print(
        f"\n💾 Planted stream written to: {out} "
        f"({g.num_edges:,} interactions, {g.num_nodes:,} nodes)"
    )
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "train": cmd_train,
    "eval": cmd_eval,
    "fla": cmd_fla,
    "ablate": cmd_ablate,
    "report": cmd_report,
    "cache": cmd_cache,
    "synth": cmd_synth,
}


# ----------------------------------------------------------------- parser


def _data_options(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("data")
    group.add_argument("--config", help="TOML file with [data]/[model]/[train]/[fla] sections")
    group.add_argument("--snapshot", help="Binary snapshot written by `stgl ingest`")
    group.add_argument("--csv", help="Interaction CSV (src,dst,timestamp[,label][,f0..])")
    group.add_argument("--node-feats", help="Optional node_id,f0.. side file")
    group.add_argument("--schema", choices=["default", "jodie"], help="CSV column layout")
    group.add_argument("--no-normalize", action="store_true", help="Keep raw feature norms")
    group.add_argument("--ratios", type=float, nargs=3, metavar=("TRAIN", "VAL", "TEST"))
    group.add_argument("--dataset-name", help="Name used in ledgers (default: file stem)")
    group.add_argument("--no-cache", action="store_true", help="Bypass the snapshot cache")


def _model_options(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("model")
    group.add_argument("--method", choices=METHODS, help="Model family")
    group.add_argument("--k", type=int, help="Neighbors per node (default: 20)")
    group.add_argument("--k2", type=int, help="Second-hop neighbors for --hops 2")
    group.add_argument("--hidden", type=int, help="Hidden dimension (default: 100)")
    group.add_argument("--time-dim", type=int, help="Time-encoding dimension (default: 100)")
    group.add_argument("--layers", type=int, help="L for gnn/rnn (default: 2)")
    group.add_argument("--activation", choices=["relu", "leaky_relu", "tanh", "sigmoid"])
    group.add_argument("--sampling", choices=["recent", "uniform"])
    group.add_argument("--hops", type=int, choices=[1, 2])
    group.add_argument(
        "--graph-direction", "--direction", dest="direction", choices=["bi", "di"]
    )
    group.add_argument("--fixed-alpha", action="store_true", default=None, help="Freeze α at 1/K")
    group.add_argument("--residual", action="store_true", default=None)


def _train_options(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("training")
    group.add_argument("--lr", type=float, help="Learning rate (default: 1e-4)")
    group.add_argument("--weight-decay", type=float, help="Weight decay (default: 1e-6)")
    group.add_argument("--batch-size", type=int, help="Batch size (default: 600)")
    group.add_argument("--epochs", type=int, help="Maximum epochs (default: 100)")
    group.add_argument("--patience", type=int, help="Early-stopping patience (default: 20)")
    group.add_argument("--optimizer", choices=["adam", "sgd"])


def _fla_options(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("fla")
    group.add_argument("--nsub", type=int, help="Examples in the Jacobian (default: 5000)")
    group.add_argument("--jitter", type=float, help="Starting Gram jitter (default: 0)")
    group.add_argument("--tau", type=float, help="τ for the GNN constant (default: 1)")


def _run_options(parser: argparse.ArgumentParser, seeds: bool = True):
    parser.add_argument("--out-dir", default="runs", help="Output directory (default: runs)")
    if seeds:
        parser.add_argument(
            "--seeds", type=parse_seeds, help="Seeds: 3, 0..5 or 1,4,7 (default: 0..5)"
        )
        parser.add_argument("--jobs", type=int, default=1, help="Parallel runs (default: 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stgl",
        description="Temporal graph learning: training, evaluation and FLA/GE analysis",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Ingest a JODIE-format CSV into a snapshot
  stgl ingest --csv wikipedia.csv --schema jodie --out wiki.stgl

  # Train SToNe over six seeds
  stgl train --snapshot wiki.stgl --method stone --k 20 --hidden 100 --seeds 0..5

  # Feature-label alignment and GE at initialization
  stgl fla --snapshot wiki.stgl --method stone --nsub 5000 --seeds 0..5

  # Input-selection / direction / fixed-α ablation
  stgl ablate --snapshot wiki.stgl --seeds 0..2

  # Summarize ledgers and the GE/AP scatter
  stgl report --ledger runs/ledger.csv --scatter runs/scatter.csv
        """,
    )
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    parser.add_argument("--quiet", action="store_true", help="Warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="CSV → binary snapshot + statistics")
    _data_options(p)
    p.add_argument("--out", help="Snapshot path (default: CSV path with .stgl)")
    _run_options(p, seeds=False)

    p = sub.add_parser("train", help="Train link prediction models")
    _data_options(p)
    _model_options(p)
    _train_options(p)
    _run_options(p)
    p.add_argument("--no-eval", action="store_true", help="Skip test evaluation after training")
    p.add_argument(
        "--algorithm1",
        "--online",
        dest="online",
        action="store_true",
        help="Online SGD, one example per step",
    )
    p.add_argument("--n", type=int, default=1000, help="Steps for --online (default: 1000)")
    p.add_argument(
        "--eta", type=float, default=1e-2, help="Step size for --online (default: 0.01)"
    )

    p = sub.add_parser("eval", help="Evaluate saved checkpoints")
    _data_options(p)
    _run_options(p, seeds=False)
    p.add_argument("--checkpoint", nargs="+", required=True)
    p.add_argument("--setting", choices=list(SETTINGS) + ["both"], default="both")
    p.add_argument("--negatives", type=int, default=100, help="Negatives per positive for ranking")

    p = sub.add_parser("fla", help="Feature-label alignment and GE at initialization")
    _data_options(p)
    _model_options(p)
    _train_options(p)
    _fla_options(p)
    _run_options(p)
    p.add_argument(
        "--ledger", help="Run ledger to pair GE with test AP (default: OUT_DIR/ledger.csv)"
    )

    p = sub.add_parser("ablate", help="SToNe input/direction/α ablation grid")
    _data_options(p)
    _model_options(p)
    _train_options(p)
    _fla_options(p)
    _run_options(p)
    p.add_argument("--inputs", nargs="*", choices=list(ABLATION_INPUTS))
    p.add_argument("--directions", nargs="*", choices=list(ABLATION_DIRECTIONS))
    p.add_argument("--alphas", nargs="*", choices=list(ABLATION_ALPHAS))

    p = sub.add_parser("report", help="Aggregate ledgers, scatters, histories and datasets")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.add_argument("--ledger", nargs="+")
    p.add_argument("--scatter", nargs="+")
    p.add_argument("--history", nargs="+")
    p.add_argument("--snapshot", nargs="+")
    p.add_argument("--checkpoint", nargs="+")
    p.add_argument("--out", help="Write the summary as JSON")
    _run_options(p, seeds=False)

    p = sub.add_parser("cache", help="Manage the snapshot cache")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.add_argument("action", choices=["stats", "clear", "cleanup", "info"])
    p.add_argument("key", nargs="?", help="Entry to clear (all if omitted)")
    p.add_argument("--cache-dir", help="Custom cache directory")
    p.add_argument("--cache-ttl-days", type=int, default=30, help="Cache TTL in days (default: 30)")
    _run_options(p, seeds=False)

    p = sub.add_parser("synth", help="Write a synthetic planted-recency CSV")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.add_argument("--out", required=True)
    p.add_argument("--nodes", type=int, default=100)
    p.add_argument("--edges", type=int, default=5000)
    p.add_argument("--repeat-prob", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d-e", type=int, default=4)
    p.add_argument("--d-n", type=int, default=8)
    _run_options(p, seeds=False)
    return parser


def resolve_config(args) -> RunConfig:
    """Defaults, then the config file, then any flags given."""
    cfg = load_config(getattr(args, "config", None))

    def get(name: str):
        return getattr(args, name, None)

    cfg = with_overrides(
        cfg,
        "data",
        csv=get("csv"),
        snapshot=get("snapshot"),
        node_feats=get("node_feats"),
        schema=get("schema"),
        normalize=False if get("no_normalize") else None,
        ratios=tuple(get("ratios")) if get("ratios") else None,
        name=get("dataset_name"),
    )
    cfg = with_overrides(
        cfg,
        "model",
        method=get("method"),
        k=get("k"),
        k2=get("k2"),
        hidden=get("hidden"),
        time_dim=get("time_dim"),
        layers=get("layers"),
        activation=get("activation"),
        sampling=get("sampling"),
        hops=get("hops"),
        direction=get("direction"),
        fixed_alpha=get("fixed_alpha"),
        residual=get("residual"),
    )
    cfg = with_overrides(
        cfg,
        "train",
        lr=get("lr"),
        weight_decay=get("weight_decay"),
        batch_size=get("batch_size"),
        max_epochs=get("epochs"),
        patience=get("patience"),
        optimizer=get("optimizer"),
        show_progress=True if not get("quiet") else None,
    )
    cfg = with_overrides(cfg, "fla", n_sub=get("nsub"), jitter=get("jitter"), tau=get("tau"))
    return with_overrides(cfg, "seeds", seeds=get("seeds"))


def _configure_logging(args):
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(level)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)

    manifest = None
    manifest_path = Path(args.out_dir) / f"manifest_{args.command}.json"
    started = time.perf_counter()
    try:
        cfg = resolve_config(args)
        manifest = RunManifest(
            command=args.command,
            config=cfg.to_dict(),
            seeds=list(cfg.seeds),
            build_id=build_id(),
        )
        if args.command in MANIFEST_COMMANDS:
            manifest.write(manifest_path)
        code = COMMANDS[args.command](args, cfg, manifest)
        manifest.timings["total_seconds"] = time.perf_counter() - started
        if args.command in MANIFEST_COMMANDS:
            manifest.finalize(manifest_path, "done")
        return code
    except KeyboardInterrupt:
        print("\n❌ Operation interrupted by user", file=sys.stderr)
        _fail(manifest, manifest_path, "interrupted")
        return EXIT_FAILURE
    except RUNTIME_ERRORS as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        _fail(manifest, manifest_path, str(e))
        return EXIT_FAILURE
    except (StglError, FileNotFoundError, ValueError) as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        _fail(manifest, manifest_path, str(e))
        return EXIT_USAGE
    except Exception as e:
        logger.debug("Unhandled failure", exc_info=True)
        print(f"❌ Error: {e}", file=sys.stderr)
        _fail(manifest, manifest_path, str(e))
        return EXIT_FAILURE


def _fail(manifest: Optional[RunManifest], path: Path, error: str):
    if manifest is None or manifest.command not in MANIFEST_COMMANDS:
        return
    try:
        manifest.finalize(path, "failed", error)
    except OSError as e:
        logger.error(f"Could not finalize manifest {path}: {e}")


if __name__ == "__main__":
    sys.exit(main())
