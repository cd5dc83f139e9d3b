import numpy as np
import pytest

from szpred import features, mspca, signal, wavelet
from szpred.errors import ShapeError


def make_chunk(seed=0, phase="interictal", channels=3):
    rec = signal.synthesize_eeg(
        signal.SynthConfig(duration_s=8 * 60, noise_sigma=0.5, seed=seed, channels=channels),
        phase=phase,
    )
    return signal.segment(rec)[0]


class TestExtractSegmentFeatures:
    def test_vector_length_3ch_level4(self):
        fv = features.extract_segment_features(np.random.default_rng(0).normal(size=(3, 2048)))
        assert len(fv.values) == 3 * 16 * 4 == 192
        assert len(fv.names) == 192

    def test_all_zero_segment(self):
        fv = features.extract_segment_features(np.zeros((3, 2048)))
        assert np.all(fv.values == 0.0)

    def test_pure_tone_lands_in_gray_coded_leaf(self):
        # Sub-band k of the natural-order tree covers the frequency band
        # whose index is the Gray code of k, because each highpass split
        # mirrors the spectrum of its downsampled input. An independent
        # DFT locates the dominant frequency; the Gray code locates the
        # leaf it must dominate.
        t = np.arange(2048) / 256.0
        tone = np.sin(2 * np.pi * 100.0 * t)
        spectrum = np.abs(np.fft.rfft(tone))
        freq = np.fft.rfftfreq(2048, d=1 / 256.0)[np.argmax(spectrum)]
        band = int(freq // 8)  # 16 leaves of 8 Hz at level 4
        expected_leaf = band ^ (band >> 1)
        fv = features.extract_segment_features(tone[np.newaxis, :])
        power = fv.values.reshape(16, 4)[:, features.STATISTICS.index("power")]
        assert int(np.argmax(power)) == expected_leaf == 10

    def test_scaling_homogeneity(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(3, 2048))
        c = 2.5
        f1 = features.extract_segment_features(x).values.reshape(3, 16, 4)
        f2 = features.extract_segment_features(c * x).values.reshape(3, 16, 4)
        assert np.allclose(f2[:, :, 0], c * f1[:, :, 0], rtol=1e-10)  # MAV
        assert np.allclose(f2[:, :, 1], c * c * f1[:, :, 1], rtol=1e-10)  # power
        assert np.allclose(f2[:, :, 2], c * f1[:, :, 2], rtol=1e-10)  # std
        assert np.allclose(f2[:, :, 3], f1[:, :, 3], atol=1e-10)  # MAV ratio

    def test_mav_ratio_wraps_and_handles_zero(self):
        # leaf 0 only: ratio denominators of other leaves are zero
        f = wavelet.filter_bank("haar")
        tree_input = np.ones((1, 2048))
        fv = features.extract_segment_features(tree_input, f)
        vals = fv.values.reshape(16, 4)
        assert vals[0, 0] > 0  # constant signal lives in the all-lowpass leaf
        assert vals[0, 3] == 0.0  # leaf 1 has zero MAV -> ratio 0
        assert vals[15, 3] == 0.0  # wraps to leaf 0? no: leaf 15 MAV is 0
    def test_wrong_length_raises(self):
        with pytest.raises(ShapeError):
            features.extract_segment_features(np.zeros((3, 2047)))


class TestBuildFeatureTable:
    def test_one_interictal_chunk(self):
        table = features.build_feature_table([make_chunk()])
        assert table.n_rows == 60
        assert set(table.labels) == {"interictal"}
        assert table.n_features == 192

    def test_empty_collection(self):
        table = features.build_feature_table([])
        assert table.n_rows == 0

    def test_deterministic(self):
        chunks = [make_chunk(seed=3), make_chunk(seed=4, phase="mixed")]
        t1 = features.build_feature_table(chunks)
        t2 = features.build_feature_table(chunks)
        assert np.array_equal(t1.values, t2.values)
        assert t1.labels == t2.labels

    def test_mixed_and_ictal_phases_label_preictal(self):
        table = features.build_feature_table(
            [make_chunk(seed=5, phase="mixed"), make_chunk(seed=6, phase="ictal")]
        )
        assert set(table.labels) == {"preictal"}

    def test_row_order_is_chunk_then_segment(self):
        chunks = [make_chunk(seed=7), make_chunk(seed=8)]
        table = features.build_feature_table(chunks)
        rows0 = features.chunk_feature_rows(chunks[0])
        rows1 = features.chunk_feature_rows(chunks[1])
        assert np.array_equal(table.values[:60], rows0)
        assert np.array_equal(table.values[60:], rows1)

    def test_geometry_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            features.build_feature_table([make_chunk(seed=9), make_chunk(seed=10, channels=2)])

    def test_rows_match_per_segment_extraction_after_denoise(self):
        chunk = make_chunk(seed=11)
        rows = features.chunk_feature_rows(chunk)
        denoised = mspca.mspca_denoise(chunk.values, wavelet.filter_bank("db4"), levels=4)
        seg = 17
        per_channel = np.stack(
            [denoised[:, c * 60 + seg] for c in range(chunk.channel_count)]
        )
        fv = features.extract_segment_features(per_channel)
        assert np.allclose(rows[seg], fv.values, rtol=0, atol=0)

    def test_schema_shared_across_tables(self):
        t1 = features.build_feature_table([make_chunk(seed=12)])
        t2 = features.build_feature_table([make_chunk(seed=13)])
        assert t1.names == t2.names


class TestCsvExport:
    def test_export_shape(self, tmp_path):
        table = features.build_feature_table([make_chunk(seed=14)])
        path = tmp_path / "t.csv"
        features.save_table_csv(table, path)
        lines = path.read_text().splitlines()
        assert lines[0].endswith(",label")
        assert len(lines) == 61
        assert lines[1].endswith(",interictal")
