"""Deliberately simple baseline learners.

They exist to show, empirically, what generic efficient learners achieve on
the planted instance; none of them knows the hidden direction.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from . import kernels
from .instance import EmbeddingSpec, embed_monomials

KINDS = ("perceptron", "averaged_perceptron", "logistic_gd", "poly_kernel_perceptron")


@dataclass(frozen=True)
class LearnerSpec:
    kind: str = "perceptron"
    epochs: int = 5
    learning_rate: float = 1.0
    seed: int = 0
    degree: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown learner {self.kind!r}; choose from {KINDS}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    def fit(self, X, y):
        return train_baseline(self, X, y)


@dataclass(frozen=True, eq=False)
class LinearHypothesis:
    """``x -> sign(<w, f(x)> + b)`` with ``f`` the identity or a monomial map; sign(0) = +1."""

    w: np.ndarray
    b: float
    embedding: Optional[EmbeddingSpec] = None

    def decision(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.embedding is not None:
            X = embed_monomials(self.embedding, X)
        return X @ self.w + self.b

    def __call__(self, X):
        return np.where(self.decision(X) >= 0, 1, -1).astype(np.int8)


class FixedHypothesis:
    """A "learner" that ignores its training data and returns a given classifier."""

    def __init__(self, h):
        self.h = h

    def fit(self, X, y):
        return self.h


def _visit_order(m, epochs, seed):
    rng = np.random.default_rng(seed)
    return np.stack([rng.permutation(m) for _ in range(epochs)]).astype(np.int64)


def _logistic_gd(X, y, epochs, lr):
    m, n = X.shape
    w = np.zeros(n)
    b = 0.0
    yf = y.astype(np.float64)
    for _ in range(epochs):
        margin = yf * (X @ w + b)
        g = -yf * expit(-margin)
        w -= lr * (X.T @ g) / m
        b -= lr * g.mean()
    return w, b


def train_baseline(spec, X, y=None):
    """Fit ``spec`` on a Dataset (or on arrays ``X, y``); deterministic given ``spec.seed``."""
    if y is None:
        X, y = X.x, X.y
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.shape[0] == 0:
        raise ValueError("cannot train on an empty dataset")
    emb = None
    if spec.kind == "poly_kernel_perceptron":
        emb = EmbeddingSpec(X.shape[1], spec.degree)
        X = embed_monomials(emb, X)
    if spec.kind == "logistic_gd":
        w, b = _logistic_gd(X, y, spec.epochs, spec.learning_rate)
        return LinearHypothesis(w, float(b))
    order = _visit_order(X.shape[0], spec.epochs, spec.seed)
    w, b, w_avg, b_avg = kernels.perceptron_train(X, y.astype(np.float64), order, spec.learning_rate)
    if spec.kind == "averaged_perceptron":
        return LinearHypothesis(np.asarray(w_avg), float(b_avg))
    return LinearHypothesis(np.asarray(w), float(b), emb)
