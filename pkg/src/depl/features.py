"""Differential-entropy feature extraction and per-fold normalization.

One feature epoch is a 128-vector: the per-channel differential entropies
of the four rhythms over one 1-second window, laid out as
[theta(32 ch), alpha(32 ch), beta(32 ch), gamma(32 ch)] in trial channel
order. The extraction pipeline decomposes a trial into bands, computes a
baseline feature from the pre-stimulus segment, smooths the per-window
entropy sequences with a trailing average, and subtracts the baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DegenerateInputError
from .signals import (BAND_ORDER, BandDecomposition, EegTrial,
                      decompose_bands, design_all_bands)

FEATURE_DIM = 128  # 32 channels x 4 bands
_LOG_2PI_E = math.log(2.0 * math.pi * math.e)


@dataclass(frozen=True)
class FeatureEpoch:
    """One 1-second window's 128-dim entropy feature plus provenance."""

    subject_id: int
    trial_id: int
    epoch_index: int
    values: np.ndarray
    label_valence: int
    label_arousal: int

    def __post_init__(self):
        if self.values.shape != (FEATURE_DIM,):
            raise ArgumentError(
                f"feature vector must have length {FEATURE_DIM}, "
                f"got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ArgumentError("feature vector contains non-finite values")


@dataclass(frozen=True)
class BaselineFeature:
    """Pre-stimulus 128-dim entropy feature, averaged over baseline windows."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (FEATURE_DIM,):
            raise ArgumentError(
                f"baseline vector must have length {FEATURE_DIM}, "
                f"got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ArgumentError("baseline vector contains non-finite values")


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension z-scoring statistics, fitted on training folds only.

    Dimensions with zero training variance get std 1 so transformed values
    stay finite (they come out as zeros).
    """

    mean: np.ndarray
    std: np.ndarray

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std


@dataclass(frozen=True)
class PreprocessConfig:
    """Knobs for the feature-extraction pipeline."""

    window_len: int = 128
    smooth_d: int = 3
    filter_order: int = 4

    def __post_init__(self):
        if self.window_len < 2:
            raise ArgumentError("window_len must be >= 2")
        if self.smooth_d < 1:
            raise ArgumentError("smooth_d must be >= 1")


def _gaussian_entropy(variance):
    """Entropy of a fitted Gaussian, 0.5 * ln(2*pi*e*var), in nats."""
    return 0.5 * (_LOG_2PI_E + np.log(variance))


def differential_entropy(window: np.ndarray) -> float:
    """Differential entropy of one window under a Gaussian fit, in nats.

    Uses the maximum-likelihood variance (mean-subtracted, divide by N),
    which matches the plug-in entropy estimator.
    """
    window = np.asarray(window, dtype=np.float64)
    if window.size < 2:
        raise ArgumentError("window needs at least 2 samples")
    var = window.var()
    if var <= 0.0:
        raise DegenerateInputError("window variance is zero")
    return float(_gaussian_entropy(var))


def _window_entropies(band_matrix: np.ndarray, window_len: int) -> np.ndarray:
    """Per-channel, per-window entropies of a (C x T) band matrix.

    T must be a positive multiple of window_len. Returns (C x n_windows).
    """
    n_ch, t = band_matrix.shape
    n_win = t // window_len
    windows = band_matrix[:, :n_win * window_len].reshape(n_ch, n_win, window_len)
    var = windows.var(axis=2)
    if np.any(var <= 0.0):
        raise DegenerateInputError("a window has zero variance; cannot take entropy")
    return _gaussian_entropy(var)


def baseline_de(baseline_bands: BandDecomposition,
                window_len: int = 128) -> BaselineFeature | None:
    """Average per-window entropies of the pre-stimulus segment.

    The input is the band decomposition restricted to the baseline samples.
    Entropy is computed on each non-overlapping ``window_len`` window and
    averaged across windows, then assembled into the canonical 128-vector.
    Returns None when the baseline is absent (length 0), which
    ``subtract_baseline`` treats as a pass-through.
    """
    n_ch, t = baseline_bands[BAND_ORDER[0]].shape
    if t == 0:
        return None
    if t % window_len != 0:
        raise ArgumentError(
            f"baseline length {t} is not a multiple of window_len {window_len}")
    values = np.empty(4 * n_ch, dtype=np.float64)
    for b, band in enumerate(BAND_ORDER):
        de = _window_entropies(baseline_bands[band], window_len)
        values[b * n_ch:(b + 1) * n_ch] = de.mean(axis=1)
    return BaselineFeature(values=values)


def smooth_sequence(de_seq: np.ndarray, d: int) -> np.ndarray:
    """Trailing moving average over the last ``d`` values of a sequence.

    output[n] = mean(de_seq[max(0, n-d+1) .. n]); the window is truncated
    at the start so output length equals input length. d = 1 is identity.
    """
    de_seq = np.asarray(de_seq, dtype=np.float64)
    if de_seq.size == 0:
        raise ArgumentError("cannot smooth an empty sequence")
    if d < 1:
        raise ArgumentError(f"smoothing delay must be >= 1, got {d}")
    return _smooth_rows(de_seq[None, :], d)[0]


def _smooth_rows(m: np.ndarray, d: int) -> np.ndarray:
    """Row-wise trailing average of a (C x n) matrix along axis 1."""
    n = m.shape[1]
    if d == 1:
        return m.copy()
    c = np.cumsum(m, axis=1)
    out = np.empty_like(m)
    head = min(d, n)
    out[:, :head] = c[:, :head] / np.arange(1, head + 1)
    if n > d:
        out[:, d:] = (c[:, d:] - c[:, :-d]) / d
    return out


def subtract_baseline(smoothed: np.ndarray,
                      baseline: BaselineFeature | None) -> np.ndarray:
    """Elementwise difference from the baseline feature.

    A None baseline (dataset without a pre-stimulus segment) passes the
    input through unchanged.
    """
    smoothed = np.asarray(smoothed, dtype=np.float64)
    if baseline is None:
        return smoothed.copy()
    if smoothed.shape != baseline.values.shape:
        raise ArgumentError(
            f"layout mismatch: {smoothed.shape} vs {baseline.values.shape}")
    return smoothed - baseline.values


def eeg_pre(trial: EegTrial, config: PreprocessConfig) -> list[FeatureEpoch]:
    """Full feature extraction for one trial.

    Decomposes every channel into the four rhythms, turns the baseline
    segment into an averaged entropy vector, computes the per-window
    entropy sequence of the experimental segment, smooths it with a
    trailing average of ``config.smooth_d`` windows, subtracts the
    baseline, and emits one FeatureEpoch per experimental window with the
    trial's labels attached.
    """
    specs = design_all_bands(trial.sample_rate_hz, config.filter_order)
    decomp = decompose_bands(trial, specs)
    b_len = trial.baseline_len_samples
    win = config.window_len

    baseline = baseline_de(decomp.sliced(0, b_len), win)
    n_ch = len(trial.channel_names)
    n_epochs = (trial.n_samples - b_len) // win
    if n_epochs == 0:
        raise ArgumentError("experimental segment shorter than one window")

    # (4 bands x C channels x n_epochs) smoothed entropy trajectories
    values = np.empty((n_epochs, 4 * n_ch), dtype=np.float64)
    for b, band in enumerate(BAND_ORDER):
        exper = decomp[band][:, b_len:b_len + n_epochs * win]
        de = _window_entropies(exper, win)
        values[:, b * n_ch:(b + 1) * n_ch] = _smooth_rows(de, config.smooth_d).T

    epochs = []
    for e in range(n_epochs):
        epochs.append(FeatureEpoch(
            subject_id=trial.subject_id,
            trial_id=trial.trial_id,
            epoch_index=e,
            values=subtract_baseline(values[e], baseline),
            label_valence=trial.label_valence,
            label_arousal=trial.label_arousal,
        ))
    return epochs


def epoch_matrix(epochs: list[FeatureEpoch]) -> np.ndarray:
    """Stack epoch values into an (n x 128) matrix."""
    if not epochs:
        raise ArgumentError("empty epoch list")
    return np.stack([e.values for e in epochs])


def fit_normalizer(train_epochs: list[FeatureEpoch]) -> Normalizer:
    """Fit per-dimension z-scoring statistics on training epochs only."""
    x = epoch_matrix(train_epochs)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    # constant columns get mean = the constant and std = 1, so they map
    # to exact zeros instead of amplified rounding noise
    constant = np.ptp(x, axis=0) == 0.0
    mean = np.where(constant, x[0], mean)
    std = np.where(constant | (std == 0.0), 1.0, std)
    return Normalizer(mean=mean, std=std)


def apply_normalizer(norm: Normalizer,
                     epochs: list[FeatureEpoch]) -> list[FeatureEpoch]:
    """Return new epochs with z-scored values; inputs are left untouched."""
    return [FeatureEpoch(
        subject_id=e.subject_id,
        trial_id=e.trial_id,
        epoch_index=e.epoch_index,
        values=norm.transform(e.values),
        label_valence=e.label_valence,
        label_arousal=e.label_arousal,
    ) for e in epochs]
