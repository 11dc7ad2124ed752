"""Band-pass filtering, rhythm decomposition, windowing, and a Gaussianity check.

EEG trials are decomposed into the four classical rhythms (theta, alpha,
beta, gamma) with zero-phase Butterworth filtering realized as second-order
sections. All functions here are pure; ``FilterSpec`` is immutable and can
be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, sosfiltfilt
from scipy.special import ndtr

from .errors import ArgumentError, ConfigError, DegenerateInputError

# Band name -> (low, high) cutoff in Hz.
BAND_EDGES: dict[str, tuple[float, float]] = {
    "theta": (4.0, 7.0),
    "alpha": (8.0, 13.0),
    "beta": (14.0, 30.0),
    "gamma": (31.0, 45.0),
}

BAND_ORDER: tuple[str, ...] = ("theta", "alpha", "beta", "gamma")


@dataclass(frozen=True)
class EegTrial:
    """One recorded trial: a (channels x samples) matrix plus its labels.

    ``samples`` holds microvolt-scale values at ``sample_rate_hz``; the
    first ``baseline_len_samples`` columns are the pre-stimulus baseline
    (0 when the source dataset has none). Binary labels are derived from
    the 1-9 ratings by the configured threshold at construction time.
    """

    subject_id: int
    trial_id: int
    sample_rate_hz: float
    channel_names: tuple[str, ...]
    samples: np.ndarray
    baseline_len_samples: int
    rating_valence: float
    rating_arousal: float
    label_valence: int
    label_arousal: int

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ArgumentError("sample_rate_hz must be positive")
        if len(self.channel_names) != 32:
            raise ArgumentError(
                f"expected 32 channel names, got {len(self.channel_names)}")
        if self.samples.ndim != 2 or self.samples.shape[0] != len(self.channel_names):
            raise ArgumentError(
                f"samples must be ({len(self.channel_names)} x T), "
                f"got shape {self.samples.shape}")
        if not 0 <= self.baseline_len_samples < self.samples.shape[1]:
            raise ArgumentError("baseline_len_samples must be in [0, T)")
        for name, r in (("valence", self.rating_valence),
                        ("arousal", self.rating_arousal)):
            if not 1.0 <= r <= 9.0:
                raise ArgumentError(f"{name} rating {r} outside [1, 9]")

    @classmethod
    def from_ratings(cls, subject_id, trial_id, sample_rate_hz, channel_names,
                     samples, baseline_len_samples, rating_valence,
                     rating_arousal, label_threshold: float = 5.0) -> "EegTrial":
        """Build a trial, deriving binary labels as rating > threshold."""
        return cls(
            subject_id=subject_id,
            trial_id=trial_id,
            sample_rate_hz=sample_rate_hz,
            channel_names=tuple(channel_names),
            samples=np.asarray(samples, dtype=np.float64),
            baseline_len_samples=baseline_len_samples,
            rating_valence=rating_valence,
            rating_arousal=rating_arousal,
            label_valence=int(rating_valence > label_threshold),
            label_arousal=int(rating_arousal > label_threshold),
        )

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class FilterSpec:
    """A designed band-pass filter: cutoffs plus a stable SOS cascade."""

    band: str
    low_hz: float
    high_hz: float
    order: int
    sample_rate_hz: float
    sos: np.ndarray = field(repr=False)

    def __post_init__(self):
        # every second-order section must have poles strictly inside the unit circle
        for k, section in enumerate(self.sos):
            roots = np.roots(section[3:])
            if np.any(np.abs(roots) >= 1.0):
                raise ConfigError(f"unstable filter section {k} for band {self.band}")


@dataclass(frozen=True)
class BandDecomposition:
    """Per-band filtered signals, each the same shape as the input matrix."""

    bands: dict[str, np.ndarray]

    def __post_init__(self):
        if set(self.bands) != set(BAND_ORDER):
            raise ConfigError(f"expected bands {BAND_ORDER}, got {tuple(self.bands)}")
        shapes = {m.shape for m in self.bands.values()}
        if len(shapes) != 1:
            raise ConfigError(f"band matrices disagree in shape: {shapes}")

    def __getitem__(self, band: str) -> np.ndarray:
        return self.bands[band]

    def sliced(self, start: int, stop: int) -> "BandDecomposition":
        """Restrict every band to the sample range [start, stop)."""
        return BandDecomposition({b: m[:, start:stop] for b, m in self.bands.items()})


def design_bandpass(band: str, sample_rate_hz: float, order: int = 4) -> FilterSpec:
    """Design a Butterworth band-pass filter for one classical EEG rhythm.

    ``order`` is the overall band-pass order (even, >= 2); the realization
    is a cascade of ``order / 2`` second-order sections, maximally flat in
    the passband.
    """
    if band not in BAND_EDGES:
        raise ConfigError(f"unknown band {band!r}; expected one of {BAND_ORDER}")
    if order < 2 or order % 2 != 0:
        raise ConfigError(f"filter order must be even and >= 2, got {order}")
    low, high = BAND_EDGES[band]
    nyq = sample_rate_hz / 2.0
    if not 0.0 < low < high < nyq:
        raise ConfigError(
            f"band {band} cutoffs ({low}, {high}) Hz invalid for "
            f"sample rate {sample_rate_hz} Hz (Nyquist {nyq} Hz)")
    if sample_rate_hz <= 2.0 * high:
        raise ConfigError(
            f"sample rate {sample_rate_hz} Hz too low for band {band} "
            f"(needs > {2 * high} Hz)")
    sos = butter(order // 2, [low, high], btype="bandpass",
                 fs=sample_rate_hz, output="sos")
    return FilterSpec(band=band, low_hz=low, high_hz=high, order=order,
                      sample_rate_hz=sample_rate_hz, sos=sos)


def design_all_bands(sample_rate_hz: float, order: int = 4) -> dict[str, FilterSpec]:
    """Design filters for all four rhythms at one sample rate."""
    return {b: design_bandpass(b, sample_rate_hz, order) for b in BAND_ORDER}


def filter_signal(spec: FilterSpec, x: np.ndarray) -> np.ndarray:
    """Apply ``spec`` forward-backward (zero phase) along the last axis.

    The input is reflect-padded by 3x the filter order at both ends before
    the double pass, then trimmed, which suppresses startup transients.
    Output length equals input length.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ArgumentError("cannot filter an empty signal")
    padlen = min(3 * spec.order, x.shape[-1] - 1)
    return sosfiltfilt(spec.sos, x, padtype="even", padlen=padlen)


def decompose_bands(trial: EegTrial, specs: dict[str, FilterSpec]) -> BandDecomposition:
    """Filter every channel of a trial into the four rhythms.

    Channels are filtered independently; each band matrix has the same
    shape as ``trial.samples``.
    """
    missing = set(BAND_ORDER) - set(specs)
    if missing:
        raise ConfigError(f"missing filter specs for bands: {sorted(missing)}")
    extra = set(specs) - set(BAND_ORDER)
    if extra:
        raise ConfigError(f"unexpected filter specs: {sorted(extra)}")
    return BandDecomposition(
        {b: filter_signal(specs[b], trial.samples) for b in BAND_ORDER})


def segment_windows(x: np.ndarray, window_len: int, hop: int) -> list[np.ndarray]:
    """Slice a vector into windows of ``window_len`` samples every ``hop``.

    Returns floor((len(x) - window_len) / hop) + 1 windows; with
    hop == window_len the windows tile the input without overlap.
    """
    x = np.asarray(x)
    if hop < 1:
        raise ArgumentError(f"hop must be >= 1, got {hop}")
    if window_len < 1:
        raise ArgumentError(f"window_len must be >= 1, got {window_len}")
    if window_len > len(x):
        raise ArgumentError(
            f"window_len {window_len} exceeds signal length {len(x)}")
    n = (len(x) - window_len) // hop + 1
    return [x[i * hop:i * hop + window_len] for i in range(n)]


def ks_normality(x: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance of standardized ``x`` from N(0, 1).

    Returns the sup-distance between the empirical CDF of the standardized
    sample and the standard normal CDF, in [0, 1]. No p-value is computed;
    thresholding is the caller's policy.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if len(x) < 8:
        raise ArgumentError(f"need at least 8 samples, got {len(x)}")
    std = x.std()
    if std == 0.0:
        raise DegenerateInputError("zero-variance input has no normality statistic")
    z = np.sort((x - x.mean()) / std)
    n = len(z)
    cdf = ndtr(z)
    d_plus = np.max(np.arange(1, n + 1) / n - cdf)
    d_minus = np.max(cdf - np.arange(0, n) / n)
    return float(max(d_plus, d_minus))
