"""Map 128-dim entropy vectors onto 9x9 scalp planes, one per rhythm.

Each of the 32 electrodes occupies one fixed cell of a 9x9 grid (rows run
front to back, columns left to right); the remaining 49 cells are
structural zeros. A frame stacks the four band planes into a 9x9x4 tensor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ConfigError
from .features import FEATURE_DIM, FeatureEpoch
from .signals import BAND_ORDER

GRID_SIZE = 9

# Standard 32-electrode 10-20 placement on a 9x9 grid; overridable via the
# [layout] config section.
STANDARD_GRID: dict[str, tuple[int, int]] = {
    "FP1": (0, 3), "FP2": (0, 5),
    "AF3": (1, 3), "AF4": (1, 5),
    "F7": (2, 0), "F3": (2, 2), "FZ": (2, 4), "F4": (2, 6), "F8": (2, 8),
    "FC5": (3, 1), "FC1": (3, 3), "FC2": (3, 5), "FC6": (3, 7),
    "T7": (4, 0), "C3": (4, 2), "CZ": (4, 4), "C4": (4, 6), "T8": (4, 8),
    "CP5": (5, 1), "CP1": (5, 3), "CP2": (5, 5), "CP6": (5, 7),
    "P7": (6, 0), "P3": (6, 2), "PZ": (6, 4), "P4": (6, 6), "P8": (6, 8),
    "PO3": (7, 3), "PO4": (7, 5),
    "O1": (8, 3), "OZ": (8, 4), "O2": (8, 5),
}

# Canonical channel order of the reference recordings (32 electrodes).
CANONICAL_CHANNELS: tuple[str, ...] = (
    "FP1", "AF3", "F3", "F7", "FC5", "FC1", "C3", "T7",
    "CP5", "CP1", "P3", "P7", "PO3", "O1", "OZ", "PZ",
    "FP2", "AF4", "FZ", "F4", "F8", "FC6", "FC2", "CZ",
    "C4", "T8", "CP6", "CP2", "P4", "P8", "PO4", "O2",
)


@dataclass(frozen=True)
class ElectrodeLayout:
    """Injective mapping from electrode label to a (row, col) grid cell."""

    cells: dict[str, tuple[int, int]]

    def __post_init__(self):
        if len(self.cells) != 32:
            raise ConfigError(f"layout must place 32 electrodes, has {len(self.cells)}")
        seen: dict[tuple[int, int], str] = {}
        for label, (r, c) in self.cells.items():
            if not (0 <= r < GRID_SIZE and 0 <= c < GRID_SIZE):
                raise ConfigError(f"electrode {label} cell ({r}, {c}) outside the grid")
            if (r, c) in seen:
                raise ConfigError(
                    f"electrodes {seen[(r, c)]} and {label} share cell ({r}, {c})")
            seen[(r, c)] = label

    def position(self, label: str) -> tuple[int, int]:
        try:
            return self.cells[label]
        except KeyError:
            raise ConfigError(f"electrode {label!r} not in layout") from None

    def indices_for(self, channel_names) -> tuple[np.ndarray, np.ndarray]:
        """Row and column index arrays aligned with a channel-name order."""
        pos = [self.position(name) for name in channel_names]
        rows = np.array([p[0] for p in pos])
        cols = np.array([p[1] for p in pos])
        return rows, cols


@dataclass(frozen=True)
class TopoFrame:
    """A 9x9x4 spatial feature tensor with its provenance."""

    values: np.ndarray
    subject_id: int
    trial_id: int
    epoch_index: int

    def __post_init__(self):
        if self.values.shape != (GRID_SIZE, GRID_SIZE, 4):
            raise ArgumentError(f"frame must be 9x9x4, got {self.values.shape}")


def standard_layout() -> ElectrodeLayout:
    """The fixed 32-electrode 10-20 grid."""
    return ElectrodeLayout(cells=dict(STANDARD_GRID))


def band_plane_index(band: str) -> int:
    try:
        return BAND_ORDER.index(band)
    except ValueError:
        raise ArgumentError(f"unknown band {band!r}") from None


def vectors_to_planes(values: np.ndarray, channel_names,
                      layout: ElectrodeLayout) -> np.ndarray:
    """Scatter (n x 128) feature rows into (n x 9 x 9 x 4) frames."""
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    n_ch = len(channel_names)
    if values.shape[1] != 4 * n_ch:
        raise ArgumentError(
            f"feature width {values.shape[1]} != 4 x {n_ch} channels")
    rows, cols = layout.indices_for(channel_names)
    frames = np.zeros((values.shape[0], GRID_SIZE, GRID_SIZE, 4))
    for b in range(4):
        frames[:, rows, cols, b] = values[:, b * n_ch:(b + 1) * n_ch]
    return frames


def to_topoframe(epoch: FeatureEpoch, layout: ElectrodeLayout,
                 channel_names=CANONICAL_CHANNELS) -> TopoFrame:
    """Place one epoch's 128-vector onto the grid, one plane per band."""
    frames = vectors_to_planes(epoch.values[None, :], channel_names, layout)
    return TopoFrame(values=frames[0], subject_id=epoch.subject_id,
                     trial_id=epoch.trial_id, epoch_index=epoch.epoch_index)


def from_topoframe(frame: TopoFrame, layout: ElectrodeLayout,
                   channel_names=CANONICAL_CHANNELS) -> np.ndarray:
    """Read occupied cells back into the canonical 128-vector order."""
    rows, cols = layout.indices_for(channel_names)
    n_ch = len(channel_names)
    values = np.empty(4 * n_ch, dtype=np.float64)
    for b in range(4):
        values[b * n_ch:(b + 1) * n_ch] = frame.values[rows, cols, b]
    return values


def extract_band(frame: TopoFrame, band: str) -> np.ndarray:
    """One band's 9x9 plane, used to feed single-band networks."""
    return frame.values[:, :, band_plane_index(band)].copy()


def layout_from_entries(entries: dict[str, str]) -> ElectrodeLayout:
    """Build a layout from config entries of the form LABEL = row,col.

    Labels not mentioned keep their standard cell; the merged result is
    re-validated for injectivity.
    """
    cells = dict(STANDARD_GRID)
    for label, text in entries.items():
        label = label.upper()
        if label not in cells:
            raise ConfigError(f"unknown electrode {label!r} in layout override")
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"layout entry {label} = {text!r} is not 'row,col'")
        try:
            cells[label] = (int(parts[0]), int(parts[1]))
        except ValueError:
            raise ConfigError(f"layout entry {label} = {text!r} is not 'row,col'") from None
    return ElectrodeLayout(cells=cells)


def layout_hash_text(layout: ElectrodeLayout) -> str:
    """Canonical one-line-per-electrode text used for hashing layouts."""
    lines = [f"{label}={r},{c}" for label, (r, c) in sorted(layout.cells.items())]
    return "\n".join(lines)
