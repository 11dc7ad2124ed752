"""Shared helpers for the test suite."""

import numpy as np

from depl.signals import EegTrial, filter_signal
from depl.topomap import CANONICAL_CHANNELS


def make_trial(samples, baseline=0, subject=1, trial=1, fs=128.0,
               rating_valence=2.0, rating_arousal=2.0, threshold=5.0):
    """EegTrial around a raw (32 x T) sample matrix."""
    return EegTrial.from_ratings(
        subject_id=subject, trial_id=trial, sample_rate_hz=fs,
        channel_names=CANONICAL_CHANNELS,
        samples=np.asarray(samples, dtype=np.float64),
        baseline_len_samples=baseline,
        rating_valence=rating_valence, rating_arousal=rating_arousal,
        label_threshold=threshold)


def tone(freq, n=4096, fs=128.0, amplitude=1.0):
    t = np.arange(n) / fs
    return amplitude * np.sin(2.0 * np.pi * freq * t)


def tone_gain(spec, freq, n=4096, fs=128.0):
    """Filter gain at one frequency, measured by FFT on the central half.

    Independent of the filtering path: the oracle only looks at the
    spectrum of the output sinusoid.
    """
    x = tone(freq, n=n, fs=fs)
    y = filter_signal(spec, x)
    seg = y[n // 4: 3 * n // 4]
    m = len(seg)
    amp = 2.0 * np.abs(np.fft.rfft(seg)) / m
    k = round(freq * m / fs)
    assert abs(freq * m / fs - k) < 1e-9, "test frequency must sit on an FFT bin"
    return amp[k]


def rel_err(a, b, floor=1e-6):
    """Elementwise relative error with an absolute floor for tiny values."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return np.abs(a - b) / denom
