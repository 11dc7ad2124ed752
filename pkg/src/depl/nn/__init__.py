"""From-scratch tensor micro-engine for the emotion-recognition network.

Tensors are plain float64 numpy arrays laid out batch x height x width x
channels (NHWC); dense layers work on batch x features. Forward passes
cache what the explicit backward passes need; a single network instance
is therefore not thread-safe, but distinct instances are independent.
"""

from .network import (LayerSpec, NetworkConfig, Network, build_network,
                      param_count, make_depl_config, PRESETS)
from .optim import Adam, adam_step, init_truncated_normal
from .train import TrainConfig, train, predict, predict_proba
from .serial import save_params, load_params

__all__ = [
    "LayerSpec", "NetworkConfig", "Network", "build_network", "param_count",
    "make_depl_config", "PRESETS", "Adam", "adam_step",
    "init_truncated_normal", "TrainConfig", "train", "predict",
    "predict_proba", "save_params", "load_params",
]
