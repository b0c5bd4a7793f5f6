"""Hashed-feature linear classifiers backing the trainable analyzers.

Tiny, deterministic, and stored as plain JSON so model artifacts are
versionable files. Training is full-batch logistic regression; corpora here
are a few hundred labeled articles, so there is nothing to tune.
"""

from __future__ import annotations

import json
import re
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_DIM = 16384
_WORD_RE = re.compile(r"\w+", re.UNICODE)


def _bucket(feature: str, dim: int) -> int:
    return zlib.crc32(feature.encode("utf-8")) % dim


def char_trigram_vector(text: str, dim: int) -> dict[int, float]:
    """L2-normalized hashed counts of character trigrams."""
    lowered = text.lower()
    counts: dict[int, float] = {}
    for i in range(len(lowered) - 2):
        idx = _bucket(lowered[i : i + 3], dim)
        counts[idx] = counts.get(idx, 0.0) + 1.0
    return _l2(counts)


def word_vector(text: str, dim: int) -> dict[int, float]:
    """L2-normalized hashed counts of lowercased word tokens."""
    counts: dict[int, float] = {}
    for match in _WORD_RE.finditer(text.lower()):
        idx = _bucket(match.group(), dim)
        counts[idx] = counts.get(idx, 0.0) + 1.0
    return _l2(counts)


def _l2(counts: dict[int, float]) -> dict[int, float]:
    norm = sum(v * v for v in counts.values()) ** 0.5
    if norm == 0:
        return counts
    return {k: v / norm for k, v in counts.items()}


def _dense(vectors: list[dict[int, float]], dim: int) -> np.ndarray:
    X = np.zeros((len(vectors), dim), dtype=np.float32)
    for row, vec in enumerate(vectors):
        for idx, val in vec.items():
            X[row, idx] = val
    return X


def _train_heads(X: np.ndarray, Y: np.ndarray, epochs: int, lr: float) -> tuple[np.ndarray, np.ndarray]:
    """Logistic regression, one head per column of Y; returns (weights, bias)."""
    n, dim = X.shape
    heads = Y.shape[1]
    W = np.zeros((heads, dim), dtype=np.float64)
    b = np.zeros(heads, dtype=np.float64)
    for _ in range(epochs):
        z = X @ W.T + b
        p = 1.0 / (1.0 + np.exp(-z))
        grad = (p - Y) / n
        W -= lr * grad.T @ X
        b -= lr * grad.sum(axis=0)
    return W, b


@dataclass
class BinaryModel:
    dim: int
    weights: np.ndarray
    bias: float

    def score(self, vector: dict[int, float]) -> float:
        z = sum(self.weights[i] * v for i, v in vector.items()) + self.bias
        return float(1.0 / (1.0 + np.exp(-z)))

    def predict(self, vector: dict[int, float]) -> bool:
        return self.score(vector) > 0.5

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps({"kind": "binary", "dim": self.dim, "weights": self.weights.tolist(), "bias": self.bias})
        )

    @classmethod
    def load(cls, path: str | Path) -> "BinaryModel":
        doc = json.loads(Path(path).read_text())
        if doc.get("kind") != "binary":
            raise ValueError(f"{path} is not a binary linear model")
        return cls(dim=doc["dim"], weights=np.asarray(doc["weights"]), bias=doc["bias"])


@dataclass
class MultiLabelModel:
    dim: int
    labels: list[str]
    weights: np.ndarray  # (len(labels), dim)
    bias: np.ndarray

    def scores(self, vector: dict[int, float]) -> np.ndarray:
        z = self.bias.copy()
        for i, v in vector.items():
            z += self.weights[:, i] * v
        return 1.0 / (1.0 + np.exp(-z))

    def predict(self, vector: dict[int, float], threshold: float = 0.5) -> list[str]:
        probs = self.scores(vector)
        return [label for label, p in zip(self.labels, probs) if p > threshold]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(
                {
                    "kind": "multilabel",
                    "dim": self.dim,
                    "labels": self.labels,
                    "weights": self.weights.tolist(),
                    "bias": self.bias.tolist(),
                }
            )
        )

    @classmethod
    def load(cls, path: str | Path) -> "MultiLabelModel":
        doc = json.loads(Path(path).read_text())
        if doc.get("kind") != "multilabel":
            raise ValueError(f"{path} is not a multilabel linear model")
        return cls(
            dim=doc["dim"],
            labels=list(doc["labels"]),
            weights=np.asarray(doc["weights"]),
            bias=np.asarray(doc["bias"]),
        )


def train_binary(
    texts: list[str],
    flags: list[bool],
    *,
    dim: int = DEFAULT_DIM,
    epochs: int = 300,
    lr: float = 2.0,
) -> BinaryModel:
    vectors = [char_trigram_vector(t, dim) for t in texts]
    X = _dense(vectors, dim)
    Y = np.asarray(flags, dtype=np.float64).reshape(-1, 1)
    W, b = _train_heads(X, Y, epochs, lr)
    return BinaryModel(dim=dim, weights=W[0], bias=float(b[0]))


def train_multilabel(
    texts: list[str],
    label_sets: list[list[str]],
    labels: list[str],
    *,
    dim: int = DEFAULT_DIM,
    epochs: int = 300,
    lr: float = 2.0,
) -> MultiLabelModel:
    vectors = [word_vector(t, dim) for t in texts]
    X = _dense(vectors, dim)
    index = {label: i for i, label in enumerate(labels)}
    Y = np.zeros((len(texts), len(labels)), dtype=np.float64)
    for row, assigned in enumerate(label_sets):
        for label in assigned:
            Y[row, index[label]] = 1.0
    W, b = _train_heads(X, Y, epochs, lr)
    return MultiLabelModel(dim=dim, labels=list(labels), weights=W, bias=b)
