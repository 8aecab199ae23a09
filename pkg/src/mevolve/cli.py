"""Command-line entry point: ``mevolve {stats,augment,train,evolve}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .augment import AugmentConfig, Mapping, augment_dataset
from .datasets import LabeledDataset, ParseError, dataset_stats, load_tu_dataset, resolve_dataset_dir, save_pool
from .evolve import EvolveConfig, run_experiment, stratified_split, write_report
from .models import CLASSIFIERS, GraphModel, ModelConfig, accuracy, save_model

DATA_DIR_ENV = "MEVOLVE_DATA_DIR"

log = logging.getLogger("mevolve")


class CliError(Exception):
    def __init__(self, message: str, status: int = 1) -> None:
        super().__init__(message)
        self.status = status


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("name", help="dataset name, e.g. MUTAG")
    p.add_argument(
        "--data-dir",
        default=os.environ.get(DATA_DIR_ENV, "data"),
        help=f"directory holding <name>/ or the <name>_*.txt files (default: ${DATA_DIR_ENV} or ./data)",
    )
    p.add_argument("--seed", type=int, default=0)


def _add_augment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mapping", choices=[m.value.replace("_", "-") for m in Mapping], default="motif-similarity")
    p.add_argument("--beta", type=float, default=0.15)
    p.add_argument("--motif-length", type=int, default=2)
    p.add_argument("--no-connectivity", action="store_true", help="do not redraw disconnecting deletions")
    p.add_argument("--max-resample", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--classifier", choices=sorted(CLASSIFIERS), default="knn")
    p.add_argument("--dims", type=int, default=128, help="embedding dimension")
    p.add_argument("--knn-k", type=int, default=5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mevolve", description="Graph augmentation and model evolution.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset statistics table")
    _add_dataset_args(p)
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")

    p = sub.add_parser("augment", help="augment every graph once and write a pool file")
    _add_dataset_args(p)
    _add_augment_args(p)
    p.add_argument("--out", required=True, help="pool file to write")

    p = sub.add_parser("train", help="train and score a baseline classifier on one split")
    _add_dataset_args(p)
    _add_model_args(p)
    p.add_argument("--model-out", help="write the trained model here")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("evolve", help="run repeated M-Evolve trials")
    _add_dataset_args(p)
    _add_augment_args(p)
    _add_model_args(p)
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--augment-from-original", action="store_true",
                   help="draw every pool from the original training set instead of the grown one")
    p.add_argument("--report", default="evolve_report.jsonl", help="JSON-lines report path")
    p.add_argument("--json", action="store_true")
    return parser


def _load(args) -> tuple[LabeledDataset, Path]:
    root = Path(args.data_dir)
    if not root.is_dir():
        raise CliError(f"data directory not found: {root}", status=2)
    base = resolve_dataset_dir(root, args.name)
    if not base.is_dir():
        raise CliError(f"dataset directory not found: {base}", status=2)
    try:
        return load_tu_dataset(root, args.name), base
    except FileNotFoundError as exc:
        raise CliError(str(exc), status=2) from None
    except ParseError as exc:
        raise CliError(f"cannot parse dataset: {exc}") from None


def _augment_config(args) -> AugmentConfig:
    return AugmentConfig(
        mapping=args.mapping,
        beta=args.beta,
        motif_length=args.motif_length,
        preserve_connectivity=not args.no_connectivity,
        max_resample_attempts=args.max_resample,
        seed=args.seed,
    )


def _model_config(args) -> ModelConfig:
    return ModelConfig(embedding_dim=args.dims, classifier=args.classifier, knn_k=args.knn_k)


def _echo_config(config: dict) -> None:
    print(f"config: {json.dumps(config, sort_keys=True)}", file=sys.stderr)
    print(f"seed: {config.get('seed')}", file=sys.stderr)


def cmd_stats(args) -> int:
    d, _ = _load(args)
    _echo_config({"command": "stats", "dataset": args.name, "data_dir": str(args.data_dir), "seed": args.seed})
    s = dataset_stats(d)
    if args.json:
        print(json.dumps({"dataset": args.name, **asdict(s)}, sort_keys=True))
        return 0
    header = f"{'Dataset':<10} {'|D|':>5} {'|Y|':>4}  {'Avg.|V|~(Min/Max)':<20} {'Avg.|E|~(Min/Max)':<20} {'bias(%)':>7}"
    v = f"{s.avg_vertices:.2f}~({s.min_vertices}/{s.max_vertices})"
    e = f"{s.avg_edges:.2f}~({s.min_edges}/{s.max_edges})"
    print(header)
    print(f"{args.name:<10} {s.graph_count:>5} {s.class_count:>4}  {v:<20} {e:<20} {100 * s.bias:>7.1f}")
    return 0


def cmd_augment(args) -> int:
    d, _ = _load(args)
    cfg = _augment_config(args)
    _echo_config({"command": "augment", "dataset": args.name, **asdict(cfg), "mapping": cfg.mapping.value,
                  "out": args.out, "workers": args.workers})
    result = augment_dataset(d, cfg, args.seed, iteration=1, workers=args.workers)
    for rec in result.skipped:
        print(f"skipped graph {rec.index}: {rec.reason}")
    if not len(result.pool):
        raise CliError("augmentation was infeasible for every graph (lower --beta or change --mapping)")
    added = removed = 0
    for src, g in zip(result.sources, result.pool.graphs):
        added += len(g.edges - d.graphs[src].edges)
        removed += len(d.graphs[src].edges - g.edges)
    save_pool(result.pool, args.out)
    print(f"pool: {len(result.pool)} graphs written to {args.out}")
    print(f"skipped: {len(result.skipped)}")
    print(f"edges added: {added}  edges removed: {removed}")
    if result.connectivity_warnings:
        print(f"connectivity lost: {result.connectivity_warnings}")
    return 0


def cmd_train(args) -> int:
    d, _ = _load(args)
    mcfg = _model_config(args)
    _echo_config({"command": "train", "dataset": args.name, "model": asdict(mcfg), "seed": args.seed})
    split_ss, _ = np.random.SeedSequence(args.seed).spawn(2)
    split = stratified_split(d.labels, (0.7, 0.1, 0.2), np.random.default_rng(split_ss))
    train, val, test = d.subset(split.train), d.subset(split.val), d.subset(split.test)
    model = GraphModel.from_config(mcfg).fit(train.graphs, train.labels, d.class_count)
    out = {
        "train_size": len(train),
        "val_size": len(val),
        "test_size": len(test),
        "train_accuracy": accuracy(model, train.graphs, train.labels),
        "val_accuracy": accuracy(model, val.graphs, val.labels),
        "test_accuracy": accuracy(model, test.graphs, test.labels),
    }
    if args.model_out:
        save_model(model, args.model_out)
    if args.json:
        print(json.dumps(out, sort_keys=True))
    else:
        for key, value in out.items():
            print(f"{key}: {value:.4f}" if isinstance(value, float) else f"{key}: {value}")
    return 0


def cmd_evolve(args) -> int:
    d, _ = _load(args)
    cfg = EvolveConfig(
        augment=_augment_config(args),
        model=_model_config(args),
        iterations=args.iterations,
        trials=args.trials,
        seed=args.seed,
        augment_from_original=args.augment_from_original,
        workers=args.workers,
    )
    _echo_config({"command": "evolve", "dataset": args.name, **cfg.to_dict(), "report": args.report})
    report = run_experiment(d, cfg)
    write_report(args.report, report, cfg, dataset=args.name)
    summary = {
        "trials": len(report.trials),
        "completed": len(report.completed),
        "mean_original_accuracy": report.mean_original,
        "mean_evolved_accuracy": report.mean_evolved,
        "mean_rimp": report.mean_rimp,
        "report": args.report,
    }
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        print(f"trials completed: {summary['completed']}/{summary['trials']}")
        print(f"mean original accuracy: {report.mean_original:.4f} (std {report.std_original:.4f})")
        print(f"mean evolved accuracy:  {report.mean_evolved:.4f} (std {report.std_evolved:.4f})")
        print(f"mean RIMP: {100 * report.mean_rimp:.2f}%")
        print(f"report: {args.report}")
    return 0


COMMANDS = {"stats": cmd_stats, "augment": cmd_augment, "train": cmd_train, "evolve": cmd_evolve}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"mevolve: error: {exc}", file=sys.stderr)
        return exc.status
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"mevolve: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
