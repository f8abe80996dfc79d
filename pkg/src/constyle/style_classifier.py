"""Binary formality scorer: hashed n-gram features + logistic regression.

Features are hashed word unigrams and character 3-5 grams, L2-normalized.
Training is full-batch gradient descent with a decaying step size, which
keeps the loss monotone and makes label-swap antisymmetry exact.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

DEFAULT_DIM = 1 << 20


class EmptyClass(Exception):
    pass


class EmptyInput(Exception):
    pass


def _hash(feature: str, dim: int) -> int:
    return zlib.crc32(feature.encode("utf-8")) % dim


def featurize(tokens, dim: int = DEFAULT_DIM) -> dict[int, float]:
    """Sparse hashed feature vector: word unigrams + char 3-5 grams, L2 norm."""
    counts: dict[int, float] = {}
    for tok in tokens:
        counts[_hash("w:" + tok, dim)] = counts.get(_hash("w:" + tok, dim), 0.0) + 1.0
    text = " ".join(tokens)
    for n in (3, 4, 5):
        for i in range(len(text) - n + 1):
            idx = _hash(f"c{n}:" + text[i:i + n], dim)
            counts[idx] = counts.get(idx, 0.0) + 1.0
    norm = math.sqrt(sum(v * v for v in counts.values()))
    if norm > 0:
        counts = {i: v / norm for i, v in counts.items()}
    return counts


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@dataclass
class StyleClassifier:
    dim: int = DEFAULT_DIM
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]
    bias: float = 0.0
    trained: bool = False

    def __post_init__(self):
        if self.weights is None:
            self.weights = np.zeros(self.dim)

    def predict_formal_prob(self, sentence) -> float:
        tokens = list(getattr(sentence, "tokens", sentence))
        feats = featurize(tokens, self.dim)
        z = self.bias + sum(self.weights[i] * v for i, v in feats.items())
        return _sigmoid(z)

    def save(self, path: str | Path) -> None:
        nz = np.nonzero(self.weights)[0]
        with open(path, "w", encoding="utf-8") as f:
            f.write("styleclf\t1\n")
            f.write(f"dim\t{self.dim}\n")
            f.write(f"bias\t{self.bias!r}\n")
            f.write(f"trained\t{int(self.trained)}\n")
            for i in nz:
                f.write(f"{int(i)}\t{float(self.weights[i])!r}\n")

    @classmethod
    def load(cls, path: str | Path) -> "StyleClassifier":
        with open(path, encoding="utf-8") as f:
            header = f.readline().rstrip("\n").split("\t")
            if header[0] != "styleclf":
                raise ValueError(f"{path}: not a classifier file")
            dim = int(f.readline().split("\t")[1])
            bias = float(f.readline().split("\t")[1])
            trained = bool(int(f.readline().split("\t")[1]))
            clf = cls(dim=dim, bias=bias, trained=trained)
            for line in f:
                idx, val = line.rstrip("\n").split("\t")
                clf.weights[int(idx)] = float(val)
        return clf


def _feature_matrix(sentences, dim: int) -> sparse.csr_matrix:
    data, indices, indptr = [], [], [0]
    for s in sentences:
        feats = featurize(list(getattr(s, "tokens", s)), dim)
        for i, v in feats.items():
            indices.append(i)
            data.append(v)
        indptr.append(len(indices))
    return sparse.csr_matrix((data, indices, indptr),
                             shape=(len(sentences), dim))


def train_classifier(informal, formal, epochs: int = 50, lr: float = 3.0,
                     seed: int = 0, dim: int = DEFAULT_DIM) -> StyleClassifier:
    """Train formal-vs-informal logistic regression; formal is the positive class."""
    if not informal or not formal:
        raise EmptyClass("both classes must be non-empty")
    del seed  # full-batch training is deterministic; kept for interface parity
    X = sparse.vstack([
        _feature_matrix(informal, dim),
        _feature_matrix(formal, dim),
    ]).tocsr()
    y = np.concatenate([-np.ones(len(informal)), np.ones(len(formal))])
    n = X.shape[0]
    w = np.zeros(dim)
    b = 0.0
    for t in range(epochs):
        z = X @ w + b
        margin = y * z
        # d/dz log(1 + exp(-m)) = -y * sigmoid(-m)
        coeff = -y / (1.0 + np.exp(margin))
        step = lr / math.sqrt(1.0 + t)
        grad_w = (X.T @ coeff) / n
        w -= step * np.asarray(grad_w).ravel()
        b -= step * float(np.mean(coeff))
    clf = StyleClassifier(dim=dim, weights=w, bias=b, trained=epochs > 0)
    return clf


def training_loss(clf: StyleClassifier, informal, formal) -> float:
    X = sparse.vstack([
        _feature_matrix(informal, clf.dim),
        _feature_matrix(formal, clf.dim),
    ]).tocsr()
    y = np.concatenate([-np.ones(len(informal)), np.ones(len(formal))])
    z = X @ clf.weights + clf.bias
    return float(np.mean(np.logaddexp(0.0, -y * z)))


def style_accuracy(clf: StyleClassifier, sentences) -> float:
    """Fraction of sentences judged formal (strictly above 0.5)."""
    sentences = list(sentences)
    if not sentences:
        raise EmptyInput("no sentences to score")
    hits = sum(1 for s in sentences if clf.predict_formal_prob(s) > 0.5)
    return hits / len(sentences)
