"""Uniform fit/predict classifiers over 128-dim z-scored feature rows.

The network classifier maps each row onto its 9x9 band plane internally,
so the evaluation harness can stay agnostic of feature geometry.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .baselines import (GaussianNbClassifier, KnnClassifier,
                        LogisticRegressionClassifier)
from .configfile import ModelOptions
from .errors import ArgumentError
from .nn import (TrainConfig, build_network, make_depl_config, predict,
                 train)
from .topomap import (CANONICAL_CHANNELS, ElectrodeLayout, band_plane_index,
                      standard_layout, vectors_to_planes)

MODEL_NAMES = ("depl", "knn", "nb", "logreg")


class DeplClassifier:
    """The band-plane CNN behind the common fit/predict interface."""

    def __init__(self, preset: str = "depl-text", band: str = "gamma",
                 train_config: TrainConfig | None = None,
                 layout: ElectrodeLayout | None = None,
                 channel_names=CANONICAL_CHANNELS,
                 se_ratio: int = 4, init_std: float = 0.05,
                 seed: int = 0):
        self.band = band
        self.layout = layout or standard_layout()
        self.channel_names = tuple(channel_names)
        self.train_config = train_config or TrainConfig()
        self.config = make_depl_config(
            preset=preset, input_channels=1,
            keep_p=self.train_config.keep_prob,
            l2=self.train_config.l2, se_ratio=se_ratio, init_std=init_std)
        self.seed = seed
        self.net = None
        self.loss_curve: list[float] | None = None

    def _frames(self, x: np.ndarray) -> np.ndarray:
        planes = vectors_to_planes(x, self.channel_names, self.layout)
        b = band_plane_index(self.band)
        return planes[:, :, :, b:b + 1]

    def fit(self, x: np.ndarray, y: np.ndarray) -> "DeplClassifier":
        self.net = build_network(self.config, seed=self.seed)
        # one integer drives both weight init and the shuffle/dropout stream
        cfg = replace(self.train_config, seed=self.seed)
        self.loss_curve = train(self._frames(x), y, self.net, cfg)
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self.net is None:
            raise ArgumentError("predict before fit")
        return predict(self.net, self._frames(x))


def make_model(name: str, options: ModelOptions,
               train_config: TrainConfig, layout: ElectrodeLayout,
               channel_names=CANONICAL_CHANNELS, seed: int = 0):
    """Instantiate a classifier by CLI name, seeded for one fold."""
    if name == "depl":
        return DeplClassifier(preset=options.preset, band=options.band,
                              train_config=train_config, layout=layout,
                              channel_names=channel_names,
                              se_ratio=options.se_ratio,
                              init_std=options.init_std, seed=seed)
    if name == "knn":
        return KnnClassifier(k=options.knn_k)
    if name == "nb":
        return GaussianNbClassifier()
    if name == "logreg":
        return LogisticRegressionClassifier(
            lr=options.logreg_lr, epochs=options.logreg_epochs,
            l2=options.logreg_l2)
    raise ArgumentError(f"unknown model {name!r}; expected one of {MODEL_NAMES}")
