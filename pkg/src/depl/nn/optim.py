"""Adam optimizer and truncated-normal weight initialization."""

from __future__ import annotations

import numpy as np

from ..errors import ArgumentError


def adam_step(params, grads, state, t, lr,
              beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update, applied to ``params`` in place.

    ``state`` is a pair of lists (first and second moments) matching
    ``params``; it is updated in place. ``t`` is the 1-based step count.
    """
    if t < 1:
        raise ArgumentError("Adam step count starts at 1")
    m, v = state
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for p, g, mi, vi in zip(params, grads, m, v):
        mi *= beta1
        mi += (1.0 - beta1) * g
        vi *= beta2
        vi += (1.0 - beta2) * (g * g)
        p -= lr * (mi / c1) / (np.sqrt(vi / c2) + eps)
    return params


class Adam:
    """Stateful wrapper around :func:`adam_step` for a fixed parameter list."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.state = ([np.zeros_like(p) for p in params],
                      [np.zeros_like(p) for p in params])

    def step(self, grads):
        self.t += 1
        adam_step(self.params, grads, self.state, self.t, self.lr,
                  self.beta1, self.beta2, self.eps)


def init_truncated_normal(shape, std, seed=None, rng=None):
    """Draw N(0, std^2) samples, redrawing anything outside +/- 2 std.

    Deterministic for a given seed (or caller-supplied generator).
    """
    if std <= 0:
        raise ArgumentError("std must be positive")
    if rng is None:
        rng = np.random.default_rng(seed)
    out = rng.normal(0.0, std, size=shape)
    bad = np.abs(out) > 2.0 * std
    while np.any(bad):
        out[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(out) > 2.0 * std
    return out
