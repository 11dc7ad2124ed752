"""Seeded synthetic EEG datasets for desk-scale testing.

Each channel is an AR(1) background (coefficient 0.9) plus one
band-limited sinusoid per rhythm with randomized frequency and phase.
High-class trials multiply the gamma oscillation's amplitude on the
occipital/parietal channels by the class-effect size, but only in the
experimental segment; the baseline carries no class effect. Per-subject
gain and DC-offset jitter model individual differences. The seed fully
determines every byte of the output.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import DatasetManifest, write_manifest, write_trial
from .errors import ArgumentError
from .signals import BAND_EDGES, EegTrial
from .topomap import CANONICAL_CHANNELS

# channels carrying the gamma class effect (posterior scalp)
EFFECT_CHANNELS = ("P7", "P3", "PZ", "P4", "P8", "PO3", "PO4", "O1", "OZ", "O2")

_AR_COEFF = 0.9
_BAND_AMPLITUDE = {"theta": 4.0, "alpha": 3.0, "beta": 2.0, "gamma": 2.0}
_RATING_LOW = 2.0
_RATING_HIGH = 8.0


@dataclass(frozen=True)
class SynthSpec:
    """Shape and statistics of a generated dataset."""

    subjects: int = 8
    trials: int = 12
    duration_s: float = 60.0
    baseline_s: float = 3.0
    sample_rate_hz: float = 128.0
    seed: int = 0
    effect_size: float = 3.0
    gain_jitter: float = 0.1
    offset_jitter: float = 2.0

    def __post_init__(self):
        if self.subjects < 1 or self.trials < 1:
            raise ArgumentError("need at least one subject and one trial")
        if self.effect_size <= 0:
            raise ArgumentError("effect size must be positive")
        if self.duration_s <= 0 or self.baseline_s < 0:
            raise ArgumentError("durations must be positive (baseline may be 0)")


def _ar1(rng: np.random.Generator, n_channels: int, n: int) -> np.ndarray:
    noise = rng.normal(0.0, 1.0, size=(n_channels, n))
    out = np.empty_like(noise)
    out[:, 0] = noise[:, 0]
    for t in range(1, n):
        out[:, t] = _AR_COEFF * out[:, t - 1] + noise[:, t]
    return out


def generate_trial(spec: SynthSpec, subject: int, trial: int) -> EegTrial:
    """One deterministic trial; high class on odd trial indices."""
    fs = spec.sample_rate_hz
    n_base = int(round(spec.baseline_s * fs))
    n_total = n_base + int(round(spec.duration_s * fs))
    n_ch = len(CANONICAL_CHANNELS)

    subj_rng = np.random.default_rng(np.random.SeedSequence([spec.seed, subject]))
    gain = 1.0 + spec.gain_jitter * subj_rng.standard_normal()
    gain = max(gain, 0.2)
    offset = spec.offset_jitter * subj_rng.standard_normal()

    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, subject, trial]))
    high = trial % 2 == 1
    samples = _ar1(rng, n_ch, n_total)

    t = np.arange(n_total) / fs
    effect_rows = [CANONICAL_CHANNELS.index(c) for c in EFFECT_CHANNELS]
    for band, (lo, hi) in BAND_EDGES.items():
        freqs = rng.uniform(lo, hi, size=n_ch)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=n_ch)
        waves = _BAND_AMPLITUDE[band] * np.sin(
            2.0 * np.pi * freqs[:, None] * t[None, :] + phases[:, None])
        if band == "gamma" and high and spec.effect_size != 1.0:
            waves[effect_rows, n_base:] *= spec.effect_size
        samples += waves

    samples = gain * samples + offset
    rating = _RATING_HIGH if high else _RATING_LOW
    return EegTrial.from_ratings(
        subject_id=subject, trial_id=trial, sample_rate_hz=fs,
        channel_names=CANONICAL_CHANNELS, samples=samples,
        baseline_len_samples=n_base, rating_valence=rating,
        rating_arousal=rating)


def generate_dataset(spec: SynthSpec, out_dir) -> DatasetManifest:
    """Write every trial file plus the manifest; byte-identical per spec."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for subject in range(1, spec.subjects + 1):
        for trial in range(spec.trials):
            name = f"s{subject:02d}_t{trial:02d}.eegt"
            write_trial(out_dir / name, generate_trial(spec, subject, trial))
            files.append(name)
    manifest = DatasetManifest(
        name="synthetic",
        subjects=spec.subjects,
        trials_per_subject=spec.trials,
        sample_rate_hz=spec.sample_rate_hz,
        channel_names=CANONICAL_CHANNELS,
        baseline_len_samples=int(round(spec.baseline_s * spec.sample_rate_hz)),
        label_threshold=5.0,
        files=tuple(files),
    )
    write_manifest(out_dir, manifest)
    return manifest
