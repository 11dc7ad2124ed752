"""Declarative layer stacks and the network object that executes them.

A ``NetworkConfig`` lists layers by kind; ``build_network`` instantiates
them with seeded truncated-normal weights and checks shape compatibility
layer by layer. ``param_count`` walks the same shape inference without
allocating anything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError, ConfigError, StateError
from . import ops
from .optim import init_truncated_normal

LAYER_KINDS = ("conv", "maxpool", "batchnorm", "se", "dense", "dropout",
               "activation", "softmax")


@dataclass(frozen=True)
class LayerSpec:
    """One layer of a declarative stack; fields are read per ``kind``."""

    kind: str
    filters: int = 0
    kernel: int = 0
    padding: str = "same"
    size: int = 2
    stride: int = 2
    ratio: int = 4
    units: int = 0
    keep_p: float = 1.0
    fn: str = "swish"

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ConfigError(f"unknown layer kind {self.kind!r}")

    def to_text(self) -> str:
        k = self.kind
        if k == "conv":
            return f"conv({self.filters},{self.kernel},{self.padding})"
        if k == "maxpool":
            return f"maxpool({self.size},{self.stride})"
        if k == "se":
            return f"se({self.ratio})"
        if k == "dense":
            return f"dense({self.units})"
        if k == "dropout":
            return f"dropout({self.keep_p:g})"
        if k == "activation":
            return self.fn
        return k


def conv(filters: int, kernel: int, padding: str = "same") -> LayerSpec:
    return LayerSpec(kind="conv", filters=filters, kernel=kernel, padding=padding)


def maxpool(size: int = 2, stride: int = 2) -> LayerSpec:
    return LayerSpec(kind="maxpool", size=size, stride=stride)


def batchnorm() -> LayerSpec:
    return LayerSpec(kind="batchnorm")


def se_block(ratio: int = 4) -> LayerSpec:
    return LayerSpec(kind="se", ratio=ratio)


def dense(units: int) -> LayerSpec:
    return LayerSpec(kind="dense", units=units)


def dropout(keep_p: float) -> LayerSpec:
    return LayerSpec(kind="dropout", keep_p=keep_p)


def activation(fn: str) -> LayerSpec:
    return LayerSpec(kind="activation", fn=fn)


def softmax_layer() -> LayerSpec:
    return LayerSpec(kind="softmax")


def layer_from_text(text: str) -> LayerSpec:
    """Parse one layer descriptor like ``conv(100,3,same)`` or ``swish``."""
    text = text.strip()
    if text in ops.ACTIVATIONS:
        return activation(text)
    if "(" not in text:
        name, args = text, []
    else:
        if not text.endswith(")"):
            raise ConfigError(f"malformed layer descriptor {text!r}")
        name, inner = text[:-1].split("(", 1)
        name = name.strip()
        args = [a.strip() for a in inner.split(",")] if inner.strip() else []
    try:
        if name == "conv":
            padding = args[2] if len(args) > 2 else "same"
            return conv(int(args[0]), int(args[1]), padding)
        if name == "maxpool":
            return maxpool(int(args[0]) if args else 2,
                           int(args[1]) if len(args) > 1 else 2)
        if name == "batchnorm":
            return batchnorm()
        if name == "se":
            return se_block(int(args[0]) if args else 4)
        if name == "dense":
            return dense(int(args[0]))
        if name == "dropout":
            return dropout(float(args[0]))
        if name == "softmax":
            return softmax_layer()
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"malformed layer descriptor {text!r}: {exc}") from None
    raise ConfigError(f"unknown layer descriptor {text!r}")


def layers_from_text(text: str) -> tuple[LayerSpec, ...]:
    """Parse a pipe-separated layer stack descriptor."""
    return tuple(layer_from_text(part) for part in text.split("|") if part.strip())


def layers_to_text(layers) -> str:
    return " | ".join(spec.to_text() for spec in layers)


@dataclass(frozen=True)
class NetworkConfig:
    """Input shape plus an ordered layer stack and training-time penalties."""

    input_shape: tuple[int, ...]
    layers: tuple[LayerSpec, ...]
    l2: float = 0.0
    init_std: float = 0.05
    name: str = "custom"


# ---------------------------------------------------------------------------
# shape inference

@dataclass(frozen=True)
class LayerInfo:
    """Resolved geometry of one layer inside a concrete config."""

    index: int
    spec: LayerSpec
    in_shape: tuple[int, ...]
    out_shape: tuple[int, ...]
    n_params: int
    n_buffers: int = 0


def _flat_dim(shape) -> int:
    return int(np.prod(shape))


def infer_layers(config: NetworkConfig) -> list[LayerInfo]:
    """Walk the stack checking shape compatibility; errors name the layer."""
    infos: list[LayerInfo] = []
    shape = tuple(config.input_shape)
    for i, spec in enumerate(config.layers):
        k = spec.kind
        if k == "softmax" and i != len(config.layers) - 1:
            raise ConfigError(f"layer {i}: softmax must be the terminal layer")
        try:
            if k == "conv":
                if len(shape) != 3:
                    raise ConfigError(f"conv needs a 3-D input, got {shape}")
                h, w, c = shape
                pad = ops._pad_amount(spec.kernel, spec.padding)
                ho = h + 2 * pad - spec.kernel + 1
                wo = w + 2 * pad - spec.kernel + 1
                if ho <= 0 or wo <= 0:
                    raise ConfigError(f"kernel {spec.kernel} does not fit {h}x{w}")
                n_params = spec.kernel * spec.kernel * c * spec.filters + spec.filters
                out = (ho, wo, spec.filters)
            elif k == "maxpool":
                h, w, c = shape
                if h < spec.size or w < spec.size:
                    raise ConfigError(f"pool size {spec.size} exceeds {h}x{w}")
                out = ((h - spec.size) // spec.stride + 1,
                       (w - spec.size) // spec.stride + 1, c)
                n_params = 0
            elif k == "batchnorm":
                c = shape[-1]
                n_params = 2 * c
                out = shape
            elif k == "se":
                if len(shape) != 3:
                    raise ConfigError(f"se needs a 3-D input, got {shape}")
                c = shape[-1]
                if c % spec.ratio != 0:
                    raise ConfigError(
                        f"{c} channels not divisible by se ratio {spec.ratio}")
                cr = c // spec.ratio
                n_params = cr * c + c * cr
                out = shape
            elif k == "dense":
                d = _flat_dim(shape)
                n_params = d * spec.units + spec.units
                out = (spec.units,)
            elif k in ("dropout", "activation", "softmax"):
                n_params = 0
                out = shape
            else:  # pragma: no cover - guarded by LayerSpec
                raise ConfigError(f"unknown layer kind {k!r}")
        except ConfigError as exc:
            raise ConfigError(f"layer {i} ({k}): {exc}") from None
        n_buffers = 2 * shape[-1] if k == "batchnorm" else 0
        infos.append(LayerInfo(index=i, spec=spec, in_shape=shape,
                               out_shape=out, n_params=n_params,
                               n_buffers=n_buffers))
        shape = out
    return infos


def param_count(config: NetworkConfig) -> int:
    """Exact trainable parameter count; additive over layers."""
    return sum(info.n_params for info in infer_layers(config))


# ---------------------------------------------------------------------------
# runtime layers

class _Layer:
    """Base runtime layer; parameters and gradients live in dicts."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self._cache = None

    def forward(self, x, mode, rng):  # pragma: no cover - abstract
        raise NotImplementedError

    def backward(self, dy):  # pragma: no cover - abstract
        raise NotImplementedError

    def _need_cache(self):
        if self._cache is None:
            raise StateError(f"{type(self).__name__}.backward before forward")
        return self._cache


class _Conv(_Layer):
    def __init__(self, spec, in_shape, rng, init_std):
        super().__init__()
        self.spec = spec
        c = in_shape[2]
        self.params["w"] = init_truncated_normal(
            (spec.kernel, spec.kernel, c, spec.filters), init_std, rng=rng)
        self.params["b"] = np.zeros(spec.filters)

    def forward(self, x, mode, rng):
        y, self._cache = ops.conv2d_forward(
            x, self.params["w"], self.params["b"], self.spec.padding)
        return y

    def backward(self, dy):
        dx, dw, db = ops.conv2d_backward(dy, self._need_cache())
        self.grads["w"] = dw
        self.grads["b"] = db
        return dx


class _MaxPool(_Layer):
    def __init__(self, spec):
        super().__init__()
        self.spec = spec

    def forward(self, x, mode, rng):
        y, self._cache = ops.maxpool_forward(x, self.spec.size, self.spec.stride)
        return y

    def backward(self, dy):
        return ops.maxpool_backward(dy, self._need_cache())


class _BatchNorm(_Layer):
    def __init__(self, in_shape):
        super().__init__()
        c = in_shape[-1]
        self.params["scale"] = np.ones(c)
        self.params["shift"] = np.zeros(c)
        self.buffers["running_mean"] = np.zeros(c)
        self.buffers["running_var"] = np.ones(c)

    def forward(self, x, mode, rng):
        y, self._cache = ops.batchnorm_forward(
            x, self.params["scale"], self.params["shift"],
            self.buffers["running_mean"], self.buffers["running_var"], mode=mode)
        return y

    def backward(self, dy):
        dx, dscale, dshift = ops.batchnorm_backward(dy, self._need_cache())
        self.grads["scale"] = dscale
        self.grads["shift"] = dshift
        return dx


class _SE(_Layer):
    def __init__(self, spec, in_shape, rng, init_std):
        super().__init__()
        c = in_shape[-1]
        cr = c // spec.ratio
        self.params["w1"] = init_truncated_normal((cr, c), init_std, rng=rng)
        self.params["w2"] = init_truncated_normal((c, cr), init_std, rng=rng)

    def forward(self, x, mode, rng):
        y, self._cache = ops.se_forward(x, self.params["w1"], self.params["w2"])
        return y

    def backward(self, dy):
        du, dw1, dw2 = ops.se_backward(dy, self._need_cache())
        self.grads["w1"] = dw1
        self.grads["w2"] = dw2
        return du


class _Dense(_Layer):
    def __init__(self, spec, in_shape, rng, init_std):
        super().__init__()
        d = _flat_dim(in_shape)
        self.params["w"] = init_truncated_normal((d, spec.units), init_std, rng=rng)
        self.params["b"] = np.zeros(spec.units)
        self._in_shape = None

    def forward(self, x, mode, rng):
        self._in_shape = x.shape
        if x.ndim > 2:
            x = x.reshape(x.shape[0], -1)
        y, self._cache = ops.dense_forward(x, self.params["w"], self.params["b"])
        return y

    def backward(self, dy):
        dx, dw, db = ops.dense_backward(dy, self._need_cache())
        self.grads["w"] = dw
        self.grads["b"] = db
        return dx.reshape(self._in_shape)


class _Dropout(_Layer):
    def __init__(self, spec):
        super().__init__()
        self.keep_p = spec.keep_p
        self._mask = None

    def forward(self, x, mode, rng):
        y, self._mask = ops.dropout_forward(x, self.keep_p, mode=mode, rng=rng)
        self._cache = True
        return y

    def backward(self, dy):
        self._need_cache()
        return ops.dropout_backward(dy, self._mask, self.keep_p)


class _Activation(_Layer):
    def __init__(self, spec):
        super().__init__()
        self.fwd, self.grad = ops.ACTIVATIONS[spec.fn]

    def forward(self, x, mode, rng):
        self._cache = x
        return self.fwd(x)

    def backward(self, dy):
        return dy * self.grad(self._need_cache())


class _Softmax(_Layer):
    def forward(self, x, mode, rng):
        self._cache = True
        return ops.softmax(x)

    def backward(self, dy):  # handled by the composite loss gradient
        return dy


class Network:
    """An instantiated layer stack with explicit forward/backward passes.

    Not thread-safe: forward caches live on the layers. Distinct
    instances are fully independent.
    """

    def __init__(self, config: NetworkConfig, seed: int | None = 0):
        self.config = config
        self.infos = infer_layers(config)
        rng = np.random.default_rng(seed)
        self.layers: list[_Layer] = []
        for info in self.infos:
            spec = info.spec
            k = spec.kind
            if k == "conv":
                layer = _Conv(spec, info.in_shape, rng, config.init_std)
            elif k == "maxpool":
                layer = _MaxPool(spec)
            elif k == "batchnorm":
                layer = _BatchNorm(info.in_shape)
            elif k == "se":
                layer = _SE(spec, info.in_shape, rng, config.init_std)
            elif k == "dense":
                layer = _Dense(spec, info.in_shape, rng, config.init_std)
            elif k == "dropout":
                layer = _Dropout(spec)
            elif k == "activation":
                layer = _Activation(spec)
            else:
                layer = _Softmax()
            self.layers.append(layer)
        self._probs = None

    # -- execution ---------------------------------------------------------

    def forward(self, x, mode="infer", rng=None):
        """Run the stack; returns class probabilities when softmax-terminated."""
        out = np.asarray(x, dtype=np.float64)
        if out.shape[1:] != tuple(self.config.input_shape):
            raise ArgumentError(
                f"input shape {out.shape[1:]} != configured "
                f"{tuple(self.config.input_shape)}")
        for layer in self.layers:
            out = layer.forward(out, mode, rng)
        self._probs = out
        return out

    def loss(self, probs, targets_onehot) -> float:
        return ops.cross_entropy_loss(probs, targets_onehot,
                                      self.conv_weights(), self.config.l2)

    def forward_loss(self, x, targets_onehot, mode="train", rng=None) -> float:
        return self.loss(self.forward(x, mode=mode, rng=rng), targets_onehot)

    def backward(self, targets_onehot):
        """Backpropagate through the cached forward pass.

        Fills every layer's gradient dict, including the L2 term on
        convolution weights.
        """
        if self._probs is None:
            raise StateError("backward called before forward")
        if not isinstance(self.layers[-1], _Softmax):
            raise StateError("backward requires a softmax-terminated stack")
        g = ops.softmax_cross_entropy_grad(self._probs, targets_onehot)
        for layer in reversed(self.layers[:-1]):
            g = layer.backward(g)
        if self.config.l2 > 0.0:
            for layer in self.layers:
                if isinstance(layer, _Conv):
                    layer.grads["w"] = layer.grads["w"] + self.config.l2 * layer.params["w"]
        return g

    # -- parameter access ---------------------------------------------------

    def conv_weights(self):
        return [l.params["w"] for l in self.layers if isinstance(l, _Conv)]

    def named_params(self):
        """Stable (name, array) list over all trainable parameters."""
        out = []
        for i, layer in enumerate(self.layers):
            for key, arr in layer.params.items():
                out.append((f"layer{i}.{key}", arr))
        return out

    def param_arrays(self):
        return [arr for _, arr in self.named_params()]

    def grad_arrays(self):
        out = []
        for layer in self.layers:
            for key in layer.params:
                if key not in layer.grads:
                    raise StateError("gradients requested before backward")
                out.append(layer.grads[key])
        return out

    def named_buffers(self):
        out = []
        for i, layer in enumerate(self.layers):
            for key, arr in layer.buffers.items():
                out.append((f"layer{i}.{key}", arr))
        return out

    def state_arrays(self):
        """Parameters plus batchnorm running stats, for serialization."""
        return self.named_params() + self.named_buffers()

    def load_state(self, named: dict[str, np.ndarray]):
        for name, arr in self.state_arrays():
            if name not in named:
                raise ArgumentError(f"missing array {name!r} in state")
            src = named[name]
            if src.shape != arr.shape:
                raise ArgumentError(
                    f"shape mismatch for {name!r}: {src.shape} vs {arr.shape}")
            arr[...] = src

    @property
    def param_count(self) -> int:
        return sum(arr.size for arr in self.param_arrays())

    @property
    def output_dim(self) -> int:
        return _flat_dim(self.infos[-1].out_shape)


def build_network(config: NetworkConfig, seed: int | None = 0) -> Network:
    """Instantiate a config with seeded weights; shape errors name the layer."""
    return Network(config, seed=seed)


# ---------------------------------------------------------------------------
# presets

PRESETS = ("depl-text", "depl-table6")


def make_depl_config(preset: str = "depl-text", input_channels: int = 1,
                     keep_p: float = 0.6, l2: float = 0.6, se_ratio: int = 4,
                     init_std: float = 0.05) -> NetworkConfig:
    """The two shipped variants of the emotion-recognition CNN.

    Both stack two conv -> swish -> batchnorm -> SE -> maxpool blocks on a
    9x9 input plane, then three dense layers with dropout after the two
    hidden ones. "depl-text" uses 3x3 kernels and dense 120/120/2;
    "depl-table6" uses 5x5 kernels and dense 120/84/2.
    """
    if preset == "depl-text":
        kernel, hidden = 3, (120, 120)
    elif preset == "depl-table6":
        kernel, hidden = 5, (120, 84)
    else:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {PRESETS}")
    layers = []
    for _ in range(2):
        layers += [conv(100, kernel, "same"), activation("swish"), batchnorm(),
                   se_block(se_ratio), maxpool(2, 2)]
    for units in hidden:
        layers += [dense(units), activation("swish"), dropout(keep_p)]
    layers += [dense(2), softmax_layer()]
    return NetworkConfig(input_shape=(9, 9, input_channels),
                         layers=tuple(layers), l2=l2, init_std=init_std,
                         name=preset)
