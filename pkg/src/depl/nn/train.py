"""Mini-batch training loop with Adam, and batched inference."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError, TrainingError
from .network import Network
from .optim import Adam


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters; defaults follow the reference setup."""

    learning_rate: float = 1e-5
    batch_size: int = 32
    epochs: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    keep_prob: float = 0.6
    l2: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if min(self.learning_rate, self.batch_size, self.epochs,
               self.beta1, self.beta2, self.eps) < 0:
            raise ArgumentError("train config values must be non-negative")
        if not 0.0 < self.keep_prob <= 1.0:
            raise ArgumentError("keep_prob must be in (0, 1]")


def _one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ArgumentError(f"labels outside [0, {n_classes})")
    return np.eye(n_classes)[labels]


def train(x: np.ndarray, y: np.ndarray, net: Network,
          cfg: TrainConfig) -> list[float]:
    """Train ``net`` in place; returns the per-epoch mean loss curve.

    Shuffling and dropout draw from one generator seeded by
    ``cfg.seed``, so (seed, config, data) fully determines the result.
    Aborts with the epoch and batch index if the loss goes non-finite.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(x) == 0:
        raise ArgumentError("empty training set")
    if len(x) != len(y):
        raise ArgumentError(f"{len(x)} inputs vs {len(y)} labels")
    targets = _one_hot(y, net.output_dim)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    opt = Adam(net.param_arrays(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    curve: list[float] = []
    n = len(x)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        losses = []
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            if len(idx) < 2:
                continue  # batchnorm cannot train on a single sample
            probs = net.forward(x[idx], mode="train", rng=rng)
            loss = net.loss(probs, targets[idx])
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {b}")
            net.backward(targets[idx])
            opt.step(net.grad_arrays())
            losses.append(loss)
        curve.append(float(np.mean(losses)))
    return curve


def predict_proba(net: Network, x: np.ndarray, batch_size: int = 512) -> np.ndarray:
    """Class probabilities in inference mode (no RNG consumed)."""
    x = np.asarray(x, dtype=np.float64)
    parts = [net.forward(x[i:i + batch_size], mode="infer")
             for i in range(0, len(x), batch_size)]
    return np.concatenate(parts, axis=0)


def predict(net: Network, x: np.ndarray) -> np.ndarray:
    """Most probable class per row."""
    return predict_proba(net, x).argmax(axis=1)
