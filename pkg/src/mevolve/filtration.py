"""Label-reliability filtering of weakly labelled (augmented) examples."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datasets import LabeledDataset

THRESHOLD_EPS = 1e-12


class MissingClassError(ValueError):
    def __init__(self, cls: int) -> None:
        super().__init__(f"class {cls} has no validation examples; its confusion row is undefined")
        self.cls = cls


@dataclass(frozen=True)
class ConfusionMatrix:
    """Row ``k`` is the mean predicted distribution over examples whose true class is ``k``."""

    rows: np.ndarray
    class_counts: np.ndarray

    @property
    def class_count(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class ReliabilityThreshold:
    theta: float
    objective: int


def confusion_matrix(probs: np.ndarray, labels: Sequence[int], class_count: int | None = None) -> ConfusionMatrix:
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    labels = np.asarray(labels, dtype=int)
    k = probs.shape[1] if class_count is None else class_count
    counts = np.bincount(labels, minlength=k)[:k]
    for cls in range(k):
        if counts[cls] == 0:
            raise MissingClassError(cls)
    rows = np.zeros((k, probs.shape[1]))
    np.add.at(rows, labels, probs)
    return ConfusionMatrix(rows / counts[:, None], counts)


def label_reliability(p: np.ndarray, y: int, q: ConfusionMatrix) -> float:
    """``p . q_y``: agreement between an example's prediction and its class's average prediction."""
    p = np.asarray(p, dtype=float)
    if p.shape != (q.rows.shape[1],):
        raise ValueError(f"probability vector of shape {p.shape} does not match {q.rows.shape[1]} classes")
    return float(p @ q.rows[y])


def reliabilities(probs: np.ndarray, labels: Sequence[int], q: ConfusionMatrix) -> np.ndarray:
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    if probs.size == 0:
        return np.zeros(0)
    if probs.shape[1] != q.rows.shape[1]:
        raise ValueError("probability vectors do not match the confusion matrix")
    return np.einsum("ij,ij->i", probs, q.rows[np.asarray(labels, dtype=int)])


def threshold_objective(theta: float, r: Sequence[float], g: Sequence[int]) -> int:
    """Number of examples with ``(theta - r_i) * g_i > 0``."""
    r = np.asarray(r, dtype=float)
    g = np.asarray(g, dtype=float)
    return int(np.count_nonzero((theta - r) * g > 0))


def optimize_threshold(r: Sequence[float], g: Sequence[int]) -> ReliabilityThreshold:
    """Threshold separating correctly (``g=+1``) from wrongly (``g=-1``) classified examples.

    The objective is a step function of ``theta`` with breakpoints at the
    ``r_i``, so it is minimised over ``{0} | {r_i} | {r_i + eps}`` (restricted to
    ``[0, 1]``). Ties go to the smallest ``theta``.
    """
    r = np.asarray(r, dtype=float)
    g = np.asarray(g, dtype=int)
    if r.size == 0:
        raise ValueError("threshold optimisation needs at least one record")
    if r.shape != g.shape or not np.all(np.isin(g, (-1, 1))):
        raise ValueError("correctness flags must be +1/-1 and match the reliabilities")
    cands = np.unique(np.concatenate(([0.0], r, r + THRESHOLD_EPS)))
    cands = cands[cands <= 1.0]
    scores = np.count_nonzero((cands[:, None] - r[None, :]) * g[None, :] > 0, axis=1)
    best = int(np.argmin(scores))
    return ReliabilityThreshold(float(cands[best]), int(scores[best]))


def correctness(probs: np.ndarray, labels: Sequence[int]) -> np.ndarray:
    """``+1`` where the argmax prediction equals the label, ``-1`` elsewhere."""
    pred = np.argmax(np.atleast_2d(probs), axis=1)
    return np.where(pred == np.asarray(labels, dtype=int), 1, -1)


@dataclass
class FilterResult:
    accepted: LabeledDataset
    rejected: LabeledDataset
    reliability: np.ndarray
    mask: np.ndarray


def filter_pool(pool: LabeledDataset, model, q: ConfusionMatrix, theta: float) -> FilterResult:
    """Split ``pool`` into examples with reliability strictly above ``theta`` and the rest."""
    probs = model.predict_proba(pool.graphs) if len(pool) else np.zeros((0, q.class_count))
    r = reliabilities(probs, pool.labels, q)
    mask = r > theta
    idx = np.arange(len(pool))
    return FilterResult(pool.subset(idx[mask]), pool.subset(idx[~mask]), r, mask)


def write_reliability_csv(path: str | os.PathLike, pool: LabeledDataset, result: FilterResult) -> None:
    """Audit dump with columns ``graph_index, origin, iteration, label, reliability, accepted``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["graph_index", "origin", "iteration", "label", "reliability", "accepted"])
        for i, (prov, y) in enumerate(zip(pool.provenance, pool.labels)):
            it = "" if prov.iteration is None else prov.iteration
            w.writerow([i, prov.origin, it, y, repr(float(result.reliability[i])), int(result.mask[i])])
