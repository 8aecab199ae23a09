"""Model evolution: augment, filter by label reliability, merge, retrain.

The loop follows the usual pseudocode closely:

    pre-train C on D_train
    repeat T times:
        D_pool <- f(D_train)
        Q, theta <- confusion matrix and reliability threshold of C on D_val
        D_train <- D_train + {(G, y) in D_pool : r(G, y) > theta}
        C <- retrain on D_train

Retraining is a full refit from scratch.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .augment import AugmentConfig, augment_dataset
from .datasets import LabeledDataset
from .filtration import confusion_matrix, correctness, filter_pool, optimize_threshold, reliabilities
from .models import GraphModel, ModelConfig, accuracy

logger = logging.getLogger(__name__)

REPORT_SCHEMA = "mevolve-report"
REPORT_VERSION = 1


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class EvolveConfig:
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    iterations: int = 5
    split: tuple[float, float, float] = (0.7, 0.1, 0.2)
    trials: int = 10
    seed: int = 0
    augment_from_original: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if len(self.split) != 3 or min(self.split) <= 0 or abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must be three positive numbers summing to 1, got {self.split}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["augment"]["mapping"] = self.augment.mapping.value
        d["split"] = list(self.split)
        return d


@dataclass(frozen=True)
class Split:
    train: list[int]
    val: list[int]
    test: list[int]


def _largest_remainder(count: int, fractions: Sequence[float]) -> list[int]:
    quotas = [count * f for f in fractions]
    sizes = [math.floor(q + 1e-9) for q in quotas]
    order = sorted(range(len(fractions)), key=lambda k: (-(quotas[k] - sizes[k]), k))
    for k in order[: count - sum(sizes)]:
        sizes[k] += 1
    # every part needs at least one example of each class
    for k in range(len(sizes)):
        if sizes[k] == 0:
            donor = max(range(len(sizes)), key=lambda j: (sizes[j], -j))
            sizes[donor] -= 1
            sizes[k] += 1
    return sizes


def stratified_split(
    labels: Sequence[int], fractions: Sequence[float] = (0.7, 0.1, 0.2), rng: np.random.Generator | None = None
) -> Split:
    """Per-class proportional train/val/test split with largest-remainder rounding."""
    rng = rng if rng is not None else np.random.default_rng(0)
    labels = np.asarray(labels, dtype=int)
    parts: list[list[int]] = [[], [], []]
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < len(fractions):
            raise SplitError(f"class {cls} has {len(members)} examples; need at least {len(fractions)}")
        members = members[rng.permutation(len(members))]
        start = 0
        for k, size in enumerate(_largest_remainder(len(members), fractions)):
            parts[k].extend(int(i) for i in members[start : start + size])
            start += size
    return Split(*(sorted(p) for p in parts))


def rimp(acc_en: float, acc_ori: float) -> float:
    """Relative improvement ``(acc_en - acc_ori) / acc_ori``."""
    if acc_ori == 0:
        raise ZeroDivisionError("relative improvement is undefined when the original accuracy is 0")
    return (acc_en - acc_ori) / acc_ori


@dataclass
class IterationRecord:
    iteration: int
    pool_size: int
    skipped: int
    accepted: int
    rejected: int
    theta: float
    objective: int
    train_size: int
    val_accuracy: float


@dataclass
class EvolveReport:
    initial_train_size: int
    iterations: list[IterationRecord] = field(default_factory=list)
    original_val_accuracy: float | None = None
    original_test_accuracy: float | None = None
    evolved_test_accuracy: float | None = None

    @property
    def rimp(self) -> float | None:
        if self.original_test_accuracy is None or self.evolved_test_accuracy is None:
            return None
        return rimp(self.evolved_test_accuracy, self.original_test_accuracy)


@dataclass
class EvolveResult:
    model: object
    original_model: object
    report: EvolveReport
    train: LabeledDataset


def m_evolve(
    train: LabeledDataset,
    val: LabeledDataset,
    cfg: EvolveConfig,
    *,
    seed: int | np.random.SeedSequence | None = None,
    test: LabeledDataset | None = None,
    model_factory: Callable[[], object] | None = None,
    mapping: Callable | None = None,
) -> EvolveResult:
    """Run the evolution loop for ``cfg.iterations`` rounds.

    ``model_factory`` returns an unfitted model with ``fit(graphs, labels,
    class_count)`` and ``predict_proba(graphs)``; the default builds a
    :class:`GraphModel` from ``cfg.model``. ``mapping`` overrides the configured
    augmentation mapping.
    """
    make = model_factory or (lambda: GraphModel.from_config(cfg.model))
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(cfg.seed if seed is None else seed)
    streams = ss.spawn(cfg.iterations)
    k = train.class_count

    model = make().fit(train.graphs, train.labels, k)
    original = model
    report = EvolveReport(initial_train_size=len(train))
    report.original_val_accuracy = accuracy(model, val.graphs, val.labels)
    original_train = train

    for t in range(1, cfg.iterations + 1):
        source = original_train if cfg.augment_from_original else train
        aug = augment_dataset(source, cfg.augment, streams[t - 1], iteration=t, workers=cfg.workers, mapping=mapping)
        pool = aug.pool

        val_probs = model.predict_proba(val.graphs)
        q = confusion_matrix(val_probs, val.labels, k)
        r_val = reliabilities(val_probs, val.labels, q)
        threshold = optimize_threshold(r_val, correctness(val_probs, val.labels))
        result = filter_pool(pool, model, q, threshold.theta)

        if len(result.accepted):
            train = train + result.accepted
        else:
            logger.info("iteration %d accepted no augmented graphs", t)
        model = make().fit(train.graphs, train.labels, k)
        report.iterations.append(
            IterationRecord(
                iteration=t,
                pool_size=len(pool),
                skipped=len(aug.skipped),
                accepted=len(result.accepted),
                rejected=len(result.rejected),
                theta=threshold.theta,
                objective=threshold.objective,
                train_size=len(train),
                val_accuracy=accuracy(model, val.graphs, val.labels),
            )
        )

    if test is not None and len(test):
        report.original_test_accuracy = accuracy(original, test.graphs, test.labels)
        report.evolved_test_accuracy = accuracy(model, test.graphs, test.labels)
    return EvolveResult(model=model, original_model=original, report=report, train=train)


@dataclass
class TrialResult:
    trial: int
    seed: int
    split_sizes: tuple[int, int, int]
    report: EvolveReport | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.report is not None


@dataclass
class ExperimentReport:
    trials: list[TrialResult]

    @property
    def completed(self) -> list[TrialResult]:
        return [t for t in self.trials if t.ok]

    def _values(self, attr: str) -> np.ndarray:
        return np.array([getattr(t.report, attr) for t in self.completed], dtype=float)

    @property
    def mean_original(self) -> float:
        return float(self._values("original_test_accuracy").mean())

    @property
    def std_original(self) -> float:
        return float(self._values("original_test_accuracy").std())

    @property
    def mean_evolved(self) -> float:
        return float(self._values("evolved_test_accuracy").mean())

    @property
    def std_evolved(self) -> float:
        return float(self._values("evolved_test_accuracy").std())

    @property
    def mean_rimp(self) -> float:
        return float(self._values("rimp").mean())


def trial_seeds(seed: int, trials: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(trials, dtype=np.uint32)]


def run_trial(
    d: LabeledDataset,
    cfg: EvolveConfig,
    trial: int,
    seed: int,
    *,
    model_factory: Callable[[], object] | None = None,
    mapping: Callable | None = None,
) -> TrialResult:
    split_ss, evolve_ss = np.random.SeedSequence(seed).spawn(2)
    split = stratified_split(d.labels, cfg.split, np.random.default_rng(split_ss))
    sizes = (len(split.train), len(split.val), len(split.test))
    result = m_evolve(
        d.subset(split.train),
        d.subset(split.val),
        cfg,
        seed=evolve_ss,
        test=d.subset(split.test),
        model_factory=model_factory,
        mapping=mapping,
    )
    return TrialResult(trial=trial, seed=seed, split_sizes=sizes, report=result.report)


def run_experiment(
    d: LabeledDataset,
    cfg: EvolveConfig,
    *,
    seeds: Sequence[int] | None = None,
    model_factory: Callable[[], object] | None = None,
    mapping: Callable | None = None,
) -> ExperimentReport:
    """Repeated seeded holdout: split, pre-train, evolve and score, once per trial."""
    seeds = list(seeds) if seeds is not None else trial_seeds(cfg.seed, cfg.trials)
    results = []
    for i, s in enumerate(seeds):
        try:
            results.append(run_trial(d, cfg, i, s, model_factory=model_factory, mapping=mapping))
        except (ValueError, ZeroDivisionError) as exc:
            logger.warning("trial %d (seed %d) failed: %s", i, s, exc)
            results.append(TrialResult(trial=i, seed=s, split_sizes=(0, 0, 0), error=str(exc)))
    report = ExperimentReport(results)
    if not report.completed:
        raise RuntimeError("every trial failed")
    return report


def report_records(report: ExperimentReport, cfg: EvolveConfig, dataset: str = "") -> list[dict]:
    records: list[dict] = [
        {"record": "header", "schema": REPORT_SCHEMA, "version": REPORT_VERSION, "dataset": dataset, "config": cfg.to_dict()}
    ]
    for tr in report.trials:
        if not tr.ok:
            records.append({"record": "trial", "trial": tr.trial, "seed": tr.seed, "status": "failed", "error": tr.error})
            continue
        for it in tr.report.iterations:
            records.append({"record": "iteration", "trial": tr.trial, **asdict(it)})
        records.append(
            {
                "record": "trial",
                "trial": tr.trial,
                "seed": tr.seed,
                "status": "ok",
                "split": list(tr.split_sizes),
                "original_val_accuracy": tr.report.original_val_accuracy,
                "original_test_accuracy": tr.report.original_test_accuracy,
                "evolved_test_accuracy": tr.report.evolved_test_accuracy,
                "rimp": tr.report.rimp,
            }
        )
    records.append(
        {
            "record": "summary",
            "trials": len(report.trials),
            "completed": len(report.completed),
            "mean_original_accuracy": report.mean_original,
            "std_original_accuracy": report.std_original,
            "mean_evolved_accuracy": report.mean_evolved,
            "std_evolved_accuracy": report.std_evolved,
            "mean_rimp": report.mean_rimp,
        }
    )
    return records


def write_report(path: str | os.PathLike, report: ExperimentReport, cfg: EvolveConfig, dataset: str = "") -> None:
    """One JSON object per line: header, iterations and trial per trial, then a summary."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in report_records(report, cfg, dataset):
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_report(path: str | os.PathLike) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    if not records or records[0].get("schema") != REPORT_SCHEMA:
        raise ValueError(f"{path}: not a {REPORT_SCHEMA} file")
    if records[0].get("version") != REPORT_VERSION:
        raise ValueError(f"{path}: unsupported report version {records[0].get('version')!r}")
    return records
