import numpy as np
import pytest

from depl.errors import ConfigError
from depl.features import FeatureEpoch
from depl.signals import BAND_ORDER
from depl.topomap import (CANONICAL_CHANNELS, GRID_SIZE, ElectrodeLayout,
                          extract_band, from_topoframe, layout_from_entries,
                          standard_layout, to_topoframe, vectors_to_planes)


def epoch_of(values):
    return FeatureEpoch(subject_id=1, trial_id=2, epoch_index=3,
                        values=np.asarray(values, dtype=np.float64),
                        label_valence=0, label_arousal=1)


class TestStandardLayout:
    def test_fp1_position(self):
        assert standard_layout().position("FP1") == (0, 3)

    def test_oz_position(self):
        assert standard_layout().position("OZ") == (8, 4)

    def test_occupies_32_distinct_cells(self):
        layout = standard_layout()
        cells = set(layout.cells.values())
        assert len(cells) == 32
        assert all(0 <= r < GRID_SIZE and 0 <= c < GRID_SIZE for r, c in cells)

    def test_covers_canonical_channels(self):
        assert set(standard_layout().cells) == set(CANONICAL_CHANNELS)

    def test_unknown_label(self):
        with pytest.raises(ConfigError):
            standard_layout().position("XX9")

    def test_duplicate_cell_rejected(self):
        cells = dict(standard_layout().cells)
        cells["FP1"] = cells["FP2"]
        with pytest.raises(ConfigError):
            ElectrodeLayout(cells=cells)


class TestToTopoframe:
    def test_zero_epoch(self):
        frame = to_topoframe(epoch_of(np.zeros(128)), standard_layout())
        np.testing.assert_array_equal(frame.values, np.zeros((9, 9, 4)))
        assert (frame.subject_id, frame.trial_id, frame.epoch_index) == (1, 2, 3)

    def test_one_hot_theta_fp1(self):
        values = np.zeros(128)
        values[0 * 32 + CANONICAL_CHANNELS.index("FP1")] = 5.5
        frame = to_topoframe(epoch_of(values), standard_layout())
        assert frame.values[0, 3, 0] == 5.5
        assert np.count_nonzero(frame.values) == 1

    def test_per_band_sums_preserved(self):
        values = np.random.default_rng(1).normal(size=128)
        frame = to_topoframe(epoch_of(values), standard_layout())
        for b in range(4):
            assert abs(frame.values[:, :, b].sum()
                       - values[b * 32:(b + 1) * 32].sum()) < 1e-12

    def test_structural_zeros(self):
        rng = np.random.default_rng(2)
        layout = standard_layout()
        rows, cols = layout.indices_for(CANONICAL_CHANNELS)
        occupied = np.zeros((9, 9), dtype=bool)
        occupied[rows, cols] = True
        for _ in range(5):
            frame = to_topoframe(epoch_of(rng.normal(size=128)), layout)
            for b in range(4):
                assert np.all(frame.values[:, :, b][~occupied] == 0.0)

    def test_permutation_sensitivity(self):
        values = np.random.default_rng(3).normal(size=128)
        swapped = values.copy()
        for b in range(4):  # swap channels 0 and 1 in every band
            swapped[[b * 32, b * 32 + 1]] = swapped[[b * 32 + 1, b * 32]]
        layout = standard_layout()
        f1 = to_topoframe(epoch_of(values), layout).values
        f2 = to_topoframe(epoch_of(swapped), layout).values
        for b in range(4):
            diff = np.argwhere(f1[:, :, b] != f2[:, :, b])
            assert len(diff) == 2

    def test_roundtrip(self):
        values = np.random.default_rng(4).normal(size=128)
        layout = standard_layout()
        frame = to_topoframe(epoch_of(values), layout)
        np.testing.assert_array_equal(from_topoframe(frame, layout), values)


class TestExtractBand:
    def test_extract_then_reinsert(self):
        rng = np.random.default_rng(5)
        layout = standard_layout()
        frame = to_topoframe(epoch_of(rng.normal(size=128)), layout)
        rebuilt = np.stack([extract_band(frame, b) for b in BAND_ORDER], axis=-1)
        np.testing.assert_array_equal(rebuilt, frame.values)

    def test_gamma_one_hot(self):
        values = np.zeros(128)
        values[3 * 32 + CANONICAL_CHANNELS.index("CZ")] = 1.0
        frame = to_topoframe(epoch_of(values), standard_layout())
        gamma = extract_band(frame, "gamma")
        assert np.count_nonzero(gamma) == 1
        assert gamma[4, 4] == 1.0

    def test_zero_frame(self):
        frame = to_topoframe(epoch_of(np.zeros(128)), standard_layout())
        np.testing.assert_array_equal(extract_band(frame, "beta"),
                                      np.zeros((9, 9)))


class TestVectorsToPlanes:
    def test_batched_matches_single(self):
        rng = np.random.default_rng(6)
        values = rng.normal(size=(7, 128))
        layout = standard_layout()
        frames = vectors_to_planes(values, CANONICAL_CHANNELS, layout)
        assert frames.shape == (7, 9, 9, 4)
        single = to_topoframe(epoch_of(values[3]), layout).values
        np.testing.assert_array_equal(frames[3], single)


class TestLayoutOverride:
    def test_override_moves_electrode(self):
        layout = layout_from_entries({"FP1": "0, 2"})
        assert layout.position("FP1") == (0, 2)
        assert layout.position("FP2") == (0, 5)

    def test_override_collision_rejected(self):
        with pytest.raises(ConfigError):
            layout_from_entries({"FP1": "0,5"})  # FP2 already there

    def test_override_unknown_electrode(self):
        with pytest.raises(ConfigError):
            layout_from_entries({"QQ1": "0,0"})

    def test_override_bad_format(self):
        with pytest.raises(ConfigError):
            layout_from_entries({"FP1": "northwest"})

    def test_override_out_of_grid(self):
        with pytest.raises(ConfigError):
            layout_from_entries({"FP1": "9,3"})
