"""Layer primitives: forward passes paired with explicit backward passes.

Every forward returns (output, cache); the matching backward consumes the
upstream gradient and the cache and returns gradients for its inputs and
parameters. Shapes follow NHWC. All math is float64.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ArgumentError, ConfigError


# ---------------------------------------------------------------------------
# activations

def sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def swish(x):
    return x * sigmoid(x)


def swish_grad(x):
    s = sigmoid(x)
    return s + x * s * (1.0 - s)


def relu(x):
    return np.maximum(x, 0.0)


def relu_grad(x):
    return (x > 0.0).astype(np.float64)


ACTIVATIONS = {
    "swish": (swish, swish_grad),
    "relu": (relu, relu_grad),
    "sigmoid": (sigmoid, lambda x: sigmoid(x) * (1.0 - sigmoid(x))),
}


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for stability."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# convolution

def _pad_amount(kernel: int, padding: str) -> int:
    if padding == "same":
        if kernel % 2 == 0:
            raise ConfigError("same padding requires an odd kernel size")
        return (kernel - 1) // 2
    if padding == "valid":
        return 0
    raise ConfigError(f"unknown padding {padding!r}")


def conv2d_forward(x, w, b, padding="same"):
    """Stride-1 2-D convolution (cross-correlation) plus bias.

    x: (N, H, W, Cin); w: (kh, kw, Cin, F); b: (F,). Computed as one
    GEMM over im2col patches.
    """
    n, h, wd, c_in = x.shape
    kh, kw, wc_in, f = w.shape
    if wc_in != c_in:
        raise ConfigError(f"kernel expects {wc_in} input channels, input has {c_in}")
    ph = _pad_amount(kh, padding)
    pw = _pad_amount(kw, padding)
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0))) if (ph or pw) else x
    ho = xp.shape[1] - kh + 1
    wo = xp.shape[2] - kw + 1
    if ho <= 0 or wo <= 0:
        raise ConfigError(
            f"kernel {kh}x{kw} does not fit padded input {xp.shape[1]}x{xp.shape[2]}")
    # (N, Ho, Wo, C, kh, kw) -> (N*Ho*Wo, kh*kw*C)
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    cols = np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3))
    cols = cols.reshape(n * ho * wo, kh * kw * c_in)
    y = cols @ w.reshape(kh * kw * c_in, f) + b
    cache = (cols, w, x.shape, (ph, pw), (ho, wo))
    return y.reshape(n, ho, wo, f), cache


def conv2d_backward(dy, cache):
    """Gradients of a conv2d_forward call: (dx, dw, db)."""
    cols, w, x_shape, (ph, pw), (ho, wo) = cache
    n, h, wd, c_in = x_shape
    kh, kw, _, f = w.shape
    dy2 = dy.reshape(-1, f)
    dw = (cols.T @ dy2).reshape(w.shape)
    db = dy2.sum(axis=0)
    dcols = (dy2 @ w.reshape(-1, f).T).reshape(n, ho, wo, kh, kw, c_in)
    dxp = np.zeros((n, h + 2 * ph, wd + 2 * pw, c_in))
    for i in range(kh):
        for j in range(kw):
            dxp[:, i:i + ho, j:j + wo, :] += dcols[:, :, :, i, j, :]
    dx = dxp[:, ph:ph + h, pw:pw + wd, :] if (ph or pw) else dxp
    return dx, dw, db


# ---------------------------------------------------------------------------
# pooling

def maxpool_forward(x, size=2, stride=2):
    """Max over size x size windows, floor division for output dims."""
    n, h, w, c = x.shape
    if h < size or w < size:
        raise ConfigError(f"pool size {size} exceeds spatial dims {h}x{w}")
    ho = (h - size) // stride + 1
    wo = (w - size) // stride + 1
    win = sliding_window_view(x, (size, size), axis=(1, 2))[:, ::stride, ::stride]
    flat = win.reshape(n, ho, wo, c, size * size)
    arg = flat.argmax(axis=-1)
    y = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    cache = (arg, x.shape, size, stride, (ho, wo))
    return np.ascontiguousarray(y), cache


def maxpool_backward(dy, cache):
    """Route gradients to each window's argmax position."""
    arg, x_shape, size, stride, (ho, wo) = cache
    n, h, w, c = x_shape
    dx = np.zeros(x_shape)
    ni, hi, wi, ci = np.indices(arg.shape, sparse=False)
    src_h = hi * stride + arg // size
    src_w = wi * stride + arg % size
    np.add.at(dx, (ni, src_h, src_w, ci), dy)
    return dx


# ---------------------------------------------------------------------------
# batch normalization

def batchnorm_forward(x, scale, shift, running_mean, running_var,
                      mode="train", momentum=0.9, eps=1e-5):
    """Per-channel normalization over all leading axes.

    Train mode normalizes by batch statistics and updates the running
    stats in place; infer mode uses the running stats. Returns
    (y, cache); cache is None in infer mode.
    """
    axes = tuple(range(x.ndim - 1))
    if mode == "train":
        if x.shape[0] < 2:
            raise ArgumentError("batchnorm training needs batch size >= 2")
        mu = x.mean(axis=axes)
        var = x.var(axis=axes)
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = (x - mu) * inv_std
        y = scale * xhat + shift
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mu
        running_var *= momentum
        running_var += (1.0 - momentum) * var
        m = x.size // x.shape[-1]
        return y, (xhat, inv_std, scale, axes, m)
    if mode == "infer":
        y = scale * (x - running_mean) / np.sqrt(running_var + eps) + shift
        return y, None
    raise ArgumentError(f"unknown mode {mode!r}")


def batchnorm_backward(dy, cache):
    """Gradients through train-mode batch statistics: (dx, dscale, dshift)."""
    xhat, inv_std, scale, axes, m = cache
    dshift = dy.sum(axis=axes)
    dscale = (dy * xhat).sum(axis=axes)
    dxhat = dy * scale
    dx = (inv_std / m) * (m * dxhat
                          - dxhat.sum(axis=axes)
                          - xhat * (dxhat * xhat).sum(axis=axes))
    return dx, dscale, dshift


# ---------------------------------------------------------------------------
# squeeze-excitation

def se_forward(u, w1, w2):
    """Channel recalibration: squeeze to means, gate, rescale.

    u: (N, H, W, C); w1: (C/r, C); w2: (C, C/r). Per sample, z is the
    spatial mean per channel, the gate is sigmoid(w2 @ relu(w1 @ z)), and
    the output is the input rescaled channel-wise by the gate.
    """
    n, h, w, c = u.shape
    if w1.shape[1] != c or w2.shape[0] != c or w1.shape[0] != w2.shape[1]:
        raise ConfigError(
            f"gate weights {w1.shape}/{w2.shape} incompatible with {c} channels")
    z = u.mean(axis=(1, 2))
    a1 = z @ w1.T
    hdd = relu(a1)
    a2 = hdd @ w2.T
    s = sigmoid(a2)
    y = u * s[:, None, None, :]
    cache = (u, z, a1, hdd, s, w1, w2)
    return y, cache


def se_backward(dy, cache):
    """Gradients through both the rescale and the gating path."""
    u, z, a1, hdd, s, w1, w2 = cache
    n, h, w, c = u.shape
    du = dy * s[:, None, None, :]
    ds = (dy * u).sum(axis=(1, 2))
    da2 = ds * s * (1.0 - s)
    dw2 = da2.T @ hdd
    dh = da2 @ w2
    da1 = dh * (a1 > 0.0)
    dw1 = da1.T @ z
    dz = da1 @ w1
    du += dz[:, None, None, :] / (h * w)
    return du, dw1, dw2


# ---------------------------------------------------------------------------
# dense, dropout, loss

def dense_forward(x, w, b):
    """Affine map on (N, D) inputs."""
    if x.shape[1] != w.shape[0]:
        raise ConfigError(f"dense expects {w.shape[0]} inputs, got {x.shape[1]}")
    return x @ w + b, (x, w)


def dense_backward(dy, cache):
    x, w = cache
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def dropout_forward(x, keep_p, mode="train", rng=None):
    """Inverted dropout: zero with prob 1-keep_p, scale survivors.

    Identity in infer mode and at keep_p == 1; no RNG is consumed then.
    """
    if not 0.0 < keep_p <= 1.0:
        raise ArgumentError(f"keep probability must be in (0, 1], got {keep_p}")
    if mode == "infer" or keep_p == 1.0:
        return x, None
    if rng is None:
        raise ArgumentError("training-mode dropout needs an RNG")
    mask = rng.random(x.shape) < keep_p
    return x * mask / keep_p, mask


def dropout_backward(dy, mask, keep_p):
    if mask is None:
        return dy
    return dy * mask / keep_p


def cross_entropy_loss(probs, targets_onehot, conv_weights=(), l2=0.0):
    """Mean cross-entropy plus an L2 penalty over convolution weights only.

    Probabilities are clamped to [1e-12, 1] before the log.
    """
    p = np.clip(probs, 1e-12, 1.0)
    data = -np.mean(np.sum(targets_onehot * np.log(p), axis=1))
    reg = 0.0
    if l2 > 0.0:
        reg = 0.5 * l2 * sum(float(np.sum(w * w)) for w in conv_weights)
    return float(data + reg)


def softmax_cross_entropy_grad(probs, targets_onehot):
    """Gradient of the mean cross-entropy w.r.t. the softmax logits."""
    n = probs.shape[0]
    return (probs - targets_onehot) / n
