"""Trial files and dataset manifests.

A trial file is self-contained and trivially parseable from any language:

    offset 0   magic "EEGT"
    4          version        u16
    6          subject_id     u32
    10         trial_id       u32
    14         sample_rate_hz f64
    22         baseline_len   u32   (samples)
    26         rating_valence f64
    34         rating_arousal f64
    42         n_channels     u16
    44         n_samples      u32
    48         channel table  n_channels x (u8 length + ASCII label)
    ...        samples        n_channels * n_samples f64, channel-major

All integers and floats are little-endian. Roundtrips are bit-exact.
A dataset directory holds one manifest.json naming every trial file.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .errors import ArgumentError, FormatError
from .signals import EegTrial

MAGIC = b"EEGT"
VERSION = 1
MANIFEST_NAME = "manifest.json"


def write_trial(path, trial: EegTrial) -> None:
    """Serialize one trial; samples are written channel-major as f64."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HII", VERSION, trial.subject_id, trial.trial_id))
        fh.write(struct.pack("<d", trial.sample_rate_hz))
        fh.write(struct.pack("<I", trial.baseline_len_samples))
        fh.write(struct.pack("<dd", trial.rating_valence, trial.rating_arousal))
        fh.write(struct.pack("<HI", len(trial.channel_names), trial.n_samples))
        for name in trial.channel_names:
            raw = name.encode("ascii")
            fh.write(struct.pack("<B", len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(trial.samples, dtype="<f8").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    at = fh.tell()
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"truncated while reading {what}", offset=at + len(data))
    return data


def read_trial(path, label_threshold: float = 5.0,
               expect_channels: int | None = None) -> EegTrial:
    """Parse one trial file; malformed input raises FormatError with offset.

    ``expect_channels`` lets callers enforce the dataset-wide channel
    count declared by the manifest.
    """
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
        version, subject_id, trial_id = struct.unpack(
            "<HII", _read_exact(fh, 10, "header"))
        if version != VERSION:
            raise FormatError(f"unsupported version {version}", offset=4)
        (sample_rate,) = struct.unpack("<d", _read_exact(fh, 8, "sample rate"))
        (baseline_len,) = struct.unpack("<I", _read_exact(fh, 4, "baseline length"))
        rating_valence, rating_arousal = struct.unpack(
            "<dd", _read_exact(fh, 16, "ratings"))
        n_channels, n_samples = struct.unpack(
            "<HI", _read_exact(fh, 6, "shape"))
        if expect_channels is not None and n_channels != expect_channels:
            raise FormatError(
                f"field n_channels is {n_channels}, expected {expect_channels}",
                offset=42)
        names = []
        for i in range(n_channels):
            (ln,) = struct.unpack("<B", _read_exact(fh, 1, f"channel {i} name length"))
            names.append(_read_exact(fh, ln, f"channel {i} name").decode("ascii"))
        raw = _read_exact(fh, 8 * n_channels * n_samples, "samples")
        samples = np.frombuffer(raw, dtype="<f8").reshape(n_channels, n_samples).copy()
        extra = fh.read(1)
        if extra:
            raise FormatError("trailing bytes after samples", offset=fh.tell() - 1)
    return EegTrial.from_ratings(
        subject_id=subject_id, trial_id=trial_id, sample_rate_hz=sample_rate,
        channel_names=names, samples=samples,
        baseline_len_samples=baseline_len, rating_valence=rating_valence,
        rating_arousal=rating_arousal, label_threshold=label_threshold)


@dataclass(frozen=True)
class DatasetManifest:
    """Directory-level description of a trial-file collection."""

    name: str
    subjects: int
    trials_per_subject: int
    sample_rate_hz: float
    channel_names: tuple[str, ...]
    baseline_len_samples: int
    label_threshold: float
    files: tuple[str, ...]

    def __post_init__(self):
        if len(self.channel_names) != 32:
            raise FormatError(
                f"field channel_names must have 32 entries, has "
                f"{len(self.channel_names)}")


def write_manifest(data_dir, manifest: DatasetManifest) -> None:
    doc = {"kind": "depl-dataset", **asdict(manifest)}
    doc["channel_names"] = list(manifest.channel_names)
    doc["files"] = list(manifest.files)
    path = Path(data_dir) / MANIFEST_NAME
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_manifest(data_dir) -> DatasetManifest:
    path = Path(data_dir) / MANIFEST_NAME
    if not path.exists():
        raise FormatError(f"no {MANIFEST_NAME} in {data_dir}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"unparseable manifest: {exc}") from None
    if doc.get("kind") != "depl-dataset":
        raise FormatError(f"manifest kind {doc.get('kind')!r} is not 'depl-dataset'")
    try:
        return DatasetManifest(
            name=doc["name"],
            subjects=int(doc["subjects"]),
            trials_per_subject=int(doc["trials_per_subject"]),
            sample_rate_hz=float(doc["sample_rate_hz"]),
            channel_names=tuple(doc["channel_names"]),
            baseline_len_samples=int(doc["baseline_len_samples"]),
            label_threshold=float(doc["label_threshold"]),
            files=tuple(doc["files"]),
        )
    except KeyError as exc:
        raise FormatError(f"manifest missing field {exc}") from None


def load_dataset(data_dir, label_threshold: float | None = None) -> list[EegTrial]:
    """Read every trial named by the manifest, validating shapes.

    ``label_threshold`` overrides the manifest's threshold when given.
    """
    data_dir = Path(data_dir)
    manifest = read_manifest(data_dir)
    threshold = manifest.label_threshold if label_threshold is None else label_threshold
    trials = []
    for rel in manifest.files:
        trial = read_trial(data_dir / rel, label_threshold=threshold,
                           expect_channels=len(manifest.channel_names))
        if tuple(trial.channel_names) != tuple(manifest.channel_names):
            raise FormatError(
                f"field channel_names in {rel} disagrees with the manifest")
        if trial.sample_rate_hz != manifest.sample_rate_hz:
            raise FormatError(
                f"field sample_rate_hz in {rel} disagrees with the manifest")
        trials.append(trial)
    if not trials:
        raise ArgumentError(f"manifest in {data_dir} lists no trial files")
    return trials
