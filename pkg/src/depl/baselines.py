"""Shallow reference classifiers on the 128-dim z-scored features.

All three are written directly against their textbook definitions so that
tie-breaking and degenerate-variance behaviour are explicit and
deterministic: KNN majority vote (k = 20) with Euclidean distance,
Gaussian naive Bayes with a variance floor, and binary logistic
regression trained by full-batch gradient descent. Fitted models are
immutable in practice; predict is pure.
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError, TrainingError
from .nn.ops import sigmoid

NB_VAR_FLOOR = 1e-9


class KnnClassifier:
    """k-nearest-neighbour majority vote; vote ties go to the lower class."""

    def __init__(self, k: int = 20):
        if k < 1:
            raise ArgumentError("k must be >= 1")
        self.k = k
        self._x = None
        self._y = None
        self._n_classes = 0

    def fit(self, x: np.ndarray, y: np.ndarray) -> "KnnClassifier":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if len(x) == 0:
            raise ArgumentError("empty training set")
        if self.k > len(x):
            raise ArgumentError(f"k={self.k} exceeds training size {len(x)}")
        self._x = x
        self._y = y
        self._n_classes = int(y.max()) + 1
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise ArgumentError("predict before fit")
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        # squared Euclidean distances, queries x training
        d2 = ((x[:, None, :] - self._x[None, :, :]) ** 2).sum(axis=2)
        near = np.argsort(d2, axis=1, kind="stable")[:, :self.k]
        out = np.empty(len(x), dtype=np.int64)
        for i, idx in enumerate(near):
            votes = np.bincount(self._y[idx], minlength=self._n_classes)
            out[i] = votes.argmax()  # argmax takes the lowest index on ties
        return out


class GaussianNbClassifier:
    """Gaussian naive Bayes with per-dimension variances floored at 1e-9."""

    def __init__(self):
        self._means = None
        self._vars = None
        self._log_priors = None
        self.classes_ = None

    def fit(self, x: np.ndarray, y: np.ndarray) -> "GaussianNbClassifier":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.classes_ = np.arange(int(y.max()) + 1)
        means, variances, priors = [], [], []
        for c in self.classes_:
            xc = x[y == c]
            if len(xc) < 2:
                raise ArgumentError(f"class {c} needs at least 2 training samples")
            means.append(xc.mean(axis=0))
            variances.append(np.maximum(xc.var(axis=0), NB_VAR_FLOOR))
            priors.append(len(xc) / len(x))
        self._means = np.stack(means)
        self._vars = np.stack(variances)
        self._log_priors = np.log(priors)
        return self

    def _joint_log_likelihood(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        # (n, classes): log prior + sum of per-dim Gaussian log densities
        diff = x[:, None, :] - self._means[None, :, :]
        ll = -0.5 * (np.log(2.0 * np.pi * self._vars)[None]
                     + diff * diff / self._vars[None]).sum(axis=2)
        return ll + self._log_priors[None, :]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        jll = self._joint_log_likelihood(x)
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self._means is None:
            raise ArgumentError("predict before fit")
        return self._joint_log_likelihood(x).argmax(axis=1)


class LogisticRegressionClassifier:
    """Binary logistic regression via full-batch gradient descent.

    Minimizes the mean negative log-likelihood plus (l2/2)*||w||^2 (bias
    unpenalized). Weights start at zero, so fitting is deterministic.
    """

    def __init__(self, lr: float = 0.1, epochs: int = 500, l2: float = 1e-4):
        self.lr = lr
        self.epochs = epochs
        self.l2 = l2
        self.w = None
        self.b = 0.0

    @staticmethod
    def nll(w, b, x, y, l2):
        """Objective value; kept separate so tests can finite-difference it."""
        p = np.clip(sigmoid(x @ w + b), 1e-12, 1.0 - 1e-12)
        data = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
        return data + 0.5 * l2 * float(w @ w)

    @staticmethod
    def gradient(w, b, x, y, l2):
        p = sigmoid(x @ w + b)
        err = p - y
        return x.T @ err / len(x) + l2 * w, float(err.mean())

    def fit(self, x: np.ndarray, y: np.ndarray) -> "LogisticRegressionClassifier":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if set(np.unique(y)) - {0.0, 1.0}:
            raise ArgumentError("logistic regression expects binary {0,1} labels")
        if len(np.unique(y)) < 2:
            raise ArgumentError("both classes must be present in training data")
        self.w = np.zeros(x.shape[1])
        self.b = 0.0
        for epoch in range(self.epochs):
            gw, gb = self.gradient(self.w, self.b, x, y, self.l2)
            self.w -= self.lr * gw
            self.b -= self.lr * gb
            if not (np.all(np.isfinite(self.w)) and np.isfinite(self.b)):
                raise TrainingError(f"logistic regression diverged at epoch {epoch}")
        return self

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        p1 = sigmoid(np.asarray(x, dtype=np.float64) @ self.w + self.b)
        return np.stack([1.0 - p1, p1], axis=1)

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self.w is None:
            raise ArgumentError("predict before fit")
        return (self.predict_proba(x)[:, 1] >= 0.5).astype(np.int64)
