"""Probability-emitting graph classifiers.

A :class:`GraphModel` embeds each graph as its Laplacian spectrum and hands the
vectors to a :class:`Classifier`. Two classifiers ship (k-nearest neighbours and
multinomial logistic regression); anything implementing the
:class:`Classifier` interface and registered with :func:`register_classifier`
can be dropped in.
"""

from __future__ import annotations

import abc
import json
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .graph import Graph

MODEL_FORMAT = "mevolve-model"
MODEL_VERSION = 1


class TrainingError(ValueError):
    pass


@lru_cache(maxsize=65536)
def laplacian_spectrum(g: Graph) -> np.ndarray:
    """Eigenvalues of ``L = D - A`` in ascending order (read-only array)."""
    if g.n == 0:
        out = np.zeros(0)
    else:
        a = g.adjacency_matrix()
        lap = np.diag(a.sum(axis=1)) - a
        out = np.linalg.eigvalsh(lap)
    out.setflags(write=False)
    return out


def spectral_embed(g: Graph, d: int = 128) -> np.ndarray:
    """The ``d`` smallest Laplacian eigenvalues, zero-padded when ``n < d``."""
    if d < 1:
        raise ValueError(f"embedding dimension must be positive, got {d}")
    spec = laplacian_spectrum(g)[:d]
    out = np.zeros(d)
    out[: len(spec)] = spec
    return out


def embed_all(graphs: Sequence[Graph], d: int = 128) -> np.ndarray:
    if not graphs:
        return np.zeros((0, d))
    return np.stack([spectral_embed(g, d) for g in graphs])


def _check_labels(y: np.ndarray, class_count: int | None) -> int:
    if y.size == 0:
        raise TrainingError("cannot fit on an empty training set")
    k = int(y.max()) + 1 if class_count is None else class_count
    if y.min() < 0 or y.max() >= k:
        raise TrainingError(f"labels must lie in [0, {k})")
    missing = sorted(set(range(k)) - set(y.tolist()))
    if missing:
        raise TrainingError(f"class {missing[0]} has no training examples")
    return k


class Classifier(abc.ABC):
    """Fit on feature rows, then emit one probability row per input row."""

    name: str = ""
    class_count: int = 0

    @abc.abstractmethod
    def fit(self, X: np.ndarray, y: Sequence[int], class_count: int | None = None) -> "Classifier":
        ...

    @abc.abstractmethod
    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        ...

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=-1)

    def get_state(self) -> dict:
        raise NotImplementedError(f"{type(self).__name__} does not support serialization")

    @classmethod
    def from_state(cls, state: dict) -> "Classifier":
        raise NotImplementedError(f"{cls.__name__} does not support serialization")


class KNNClassifier(Classifier):
    """Vote-fraction probabilities over the ``k`` nearest training rows.

    Distance ties go to the lower training index.
    """

    name = "knn"

    def __init__(self, k: int = 5) -> None:
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.X: np.ndarray | None = None
        self.y: np.ndarray | None = None

    def fit(self, X, y, class_count=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        self.class_count = _check_labels(y, class_count)
        if self.k > len(y):
            raise TrainingError(f"k={self.k} exceeds training-set size {len(y)}")
        self.X, self.y = X.copy(), y.copy()
        return self

    def predict_proba(self, X):
        if self.X is None:
            raise RuntimeError("classifier is not fitted")
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.X.shape[1]:
            raise ValueError(f"feature dimension {X.shape[1]} != trained {self.X.shape[1]}")
        dist = cdist(X, self.X)
        nearest = np.argsort(dist, axis=1, kind="stable")[:, : self.k]
        out = np.zeros((len(X), self.class_count))
        for row, idx in enumerate(nearest):
            out[row] = np.bincount(self.y[idx], minlength=self.class_count) / self.k
        return out[0] if single else out

    def get_state(self):
        return {"k": self.k, "class_count": self.class_count, "X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_state(cls, state):
        clf = cls(k=state["k"])
        clf.class_count = state["class_count"]
        clf.X = np.asarray(state["X"], dtype=float).reshape(len(state["y"]), -1)
        clf.y = np.asarray(state["y"], dtype=int)
        return clf


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_loss_and_grad(
    W: np.ndarray, b: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus ``l2/2 * ||W||^2``, and its gradient in ``(W, b)``."""
    n = len(y)
    P = softmax(X @ W + b)
    logp = np.log(np.clip(P[np.arange(n), y], 1e-300, None))
    loss = -logp.mean() + 0.5 * l2 * np.sum(W * W)
    R = P.copy()
    R[np.arange(n), y] -= 1.0
    R /= n
    return float(loss), X.T @ R + l2 * W, R.sum(axis=0)


class LogisticRegression(Classifier):
    """Multinomial logistic regression trained by full-batch gradient descent.

    Features are standardized with training-set statistics. Weights start at
    zero, so fitting is deterministic for a given data order.
    """

    name = "logistic"

    def __init__(self, learning_rate: float = 0.5, l2: float = 1e-3, epochs: int = 500, tol: float = 1e-6) -> None:
        self.learning_rate = learning_rate
        self.l2 = l2
        self.epochs = epochs
        self.tol = tol
        self.W: np.ndarray | None = None
        self.b: np.ndarray | None = None
        self.mean: np.ndarray | None = None
        self.scale: np.ndarray | None = None
        self.n_iter_ = 0

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale

    def init_params(self, dim: int, class_count: int) -> None:
        self.class_count = class_count
        self.W = np.zeros((dim, class_count))
        self.b = np.zeros(class_count)
        self.mean = np.zeros(dim)
        self.scale = np.ones(dim)

    def fit(self, X, y, class_count=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        k = _check_labels(y, class_count)
        self.init_params(X.shape[1], k)
        self.mean = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale = np.where(std > 1e-12, std, 1.0)
        Z = self._standardize(X)
        for it in range(1, self.epochs + 1):
            _, gW, gb = softmax_loss_and_grad(self.W, self.b, Z, y, self.l2)
            self.W -= self.learning_rate * gW
            self.b -= self.learning_rate * gb
            self.n_iter_ = it
            if max(np.abs(gW).max(initial=0.0), np.abs(gb).max()) < self.tol:
                break
        return self

    def predict_proba(self, X):
        if self.W is None:
            raise RuntimeError("classifier is not fitted")
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.W.shape[0]:
            raise ValueError(f"feature dimension {X.shape[-1]} != trained {self.W.shape[0]}")
        return softmax(self._standardize(X) @ self.W + self.b)

    def get_state(self):
        return {
            "learning_rate": self.learning_rate,
            "l2": self.l2,
            "epochs": self.epochs,
            "tol": self.tol,
            "class_count": self.class_count,
            "W": self.W.tolist(),
            "b": self.b.tolist(),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
        }

    @classmethod
    def from_state(cls, state):
        clf = cls(state["learning_rate"], state["l2"], state["epochs"], state["tol"])
        clf.class_count = state["class_count"]
        clf.W = np.asarray(state["W"], dtype=float).reshape(-1, clf.class_count)
        clf.b = np.asarray(state["b"], dtype=float)
        clf.mean = np.asarray(state["mean"], dtype=float)
        clf.scale = np.asarray(state["scale"], dtype=float)
        return clf


@dataclass(frozen=True)
class ModelConfig:
    embedding_dim: int = 128
    classifier: str = "knn"
    knn_k: int = 5
    learning_rate: float = 0.5
    l2: float = 1e-3
    epochs: int = 500
    tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.embedding_dim < 1:
            raise ValueError("embedding_dim must be positive")
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"unknown classifier {self.classifier!r}; choose one of {', '.join(CLASSIFIERS)}")


CLASSIFIERS: dict[str, Callable[["ModelConfig"], Classifier]] = {
    "knn": lambda cfg: KNNClassifier(cfg.knn_k),
    "logistic": lambda cfg: LogisticRegression(cfg.learning_rate, cfg.l2, cfg.epochs, cfg.tol),
}
_STATE_LOADERS: dict[str, type[Classifier]] = {"knn": KNNClassifier, "logistic": LogisticRegression}


def register_classifier(name: str, factory: Callable[[ModelConfig], Classifier], cls: type[Classifier] | None = None) -> None:
    """Make an external classifier selectable by ``ModelConfig.classifier``."""
    CLASSIFIERS[name] = factory
    if cls is not None:
        _STATE_LOADERS[name] = cls


class GraphModel:
    """Spectral embedding followed by a feature classifier."""

    def __init__(self, classifier: Classifier, embedding_dim: int = 128) -> None:
        self.classifier = classifier
        self.embedding_dim = embedding_dim

    @classmethod
    def from_config(cls, cfg: ModelConfig) -> "GraphModel":
        return cls(CLASSIFIERS[cfg.classifier](cfg), cfg.embedding_dim)

    @property
    def class_count(self) -> int:
        return self.classifier.class_count

    def embed(self, graphs: Sequence[Graph]) -> np.ndarray:
        return embed_all(graphs, self.embedding_dim)

    def fit(self, graphs: Sequence[Graph], labels: Sequence[int], class_count: int | None = None) -> "GraphModel":
        self.classifier.fit(self.embed(graphs), labels, class_count)
        return self

    def predict_proba(self, graphs: Sequence[Graph]) -> np.ndarray:
        if not len(graphs):
            return np.zeros((0, self.class_count))
        return np.atleast_2d(self.classifier.predict_proba(self.embed(graphs)))


def accuracy(model, inputs, labels: Sequence[int]) -> float:
    """Fraction of inputs whose argmax prediction (lowest class on ties) equals the label."""
    labels = np.asarray(labels, dtype=int)
    if labels.size == 0:
        raise ValueError("accuracy of an empty evaluation set is undefined")
    pred = np.argmax(np.atleast_2d(model.predict_proba(inputs)), axis=1)
    return float(np.mean(pred == labels))


def save_model(model: GraphModel, path: str | os.PathLike) -> None:
    """Write a JSON model file; floats use shortest round-trip repr so reloads are exact."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "embedding": {"kind": "laplacian-spectrum", "dim": model.embedding_dim},
        "classifier": model.classifier.name,
        "state": model.classifier.get_state(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path: str | os.PathLike) -> GraphModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {doc.get('version')!r}")
    cls = _STATE_LOADERS.get(doc["classifier"])
    if cls is None:
        raise ValueError(f"{path}: unknown classifier {doc['classifier']!r}")
    return GraphModel(cls.from_state(doc["state"]), doc["embedding"]["dim"])


__all__ = [
    "Classifier",
    "GraphModel",
    "KNNClassifier",
    "LogisticRegression",
    "ModelConfig",
    "TrainingError",
    "accuracy",
    "embed_all",
    "laplacian_spectrum",
    "load_model",
    "register_classifier",
    "save_model",
    "softmax_loss_and_grad",
    "spectral_embed",
]
