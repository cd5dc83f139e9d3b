import numpy as np
import pytest

from szpred import signal
from szpred.errors import InsufficientDataError, ParameterError, ParseError


def cfg(**kw):
    base = dict(duration_s=8, background_bands=((10.0, 1.0),), noise_sigma=0.0, channels=1)
    base.update(kw)
    return signal.SynthConfig(**base)


class TestSynthesize:
    def test_pure_sinusoid_peak(self):
        rec = signal.synthesize_eeg(cfg())
        assert rec.n_samples == 2048
        assert abs(np.max(np.abs(rec.channels)) - 1.0) < 1e-9

    def test_deterministic_given_seed(self):
        c = cfg(noise_sigma=1.0, seed=42, channels=3)
        r1, r2 = signal.synthesize_eeg(c), signal.synthesize_eeg(c)
        assert np.array_equal(r1.channels, r2.channels)

    def test_noise_variance_monte_carlo(self):
        c = cfg(duration_s=60, background_bands=(), noise_sigma=1.0, seed=7, channels=1)
        rec = signal.synthesize_eeg(c)
        assert rec.channels.size >= 15000
        assert abs(np.var(rec.channels) - 1.0) < 0.1

    def test_signature_ramp_and_onset(self):
        sig = signal.PreictalSignature(center_hz=4.0, peak_amplitude=2.0, start_s=2.0, onset_s=6.0)
        rec = signal.synthesize_eeg(cfg(background_bands=(), preictal_signature=sig), phase="mixed")
        assert rec.onset_index == 6 * 256
        env = np.abs(rec.channels[0])
        rate = rec.sample_rate_hz
        assert np.max(env[: 2 * rate]) < 1e-9  # silent before the span
        late = np.max(env[6 * rate :])
        early = np.max(env[2 * rate : 3 * rate])
        assert late > 4 * early  # ramp grows toward the onset

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            signal.SynthConfig(duration_s=0)
        with pytest.raises(ParameterError):
            signal.SynthConfig(duration_s=1, noise_sigma=-0.1)


class TestBuildPreictal:
    def _pair(self, pre_minutes=60, ict_minutes=3):
        pre = signal.synthesize_eeg(
            cfg(duration_s=pre_minutes * 60, channels=3, noise_sigma=0.1), phase="preictal"
        )
        ict = signal.synthesize_eeg(
            cfg(duration_s=ict_minutes * 60, channels=3, noise_sigma=0.1, seed=9), phase="ictal"
        )
        return pre, ict

    def test_60min_plus_3min(self):
        pre, ict = self._pair()
        mix = signal.build_preictal(pre, ict)
        assert mix.n_samples == 51 * 60 * 256
        assert mix.onset_index == 48 * 60 * 256 == 737280
        assert mix.phase == "mixed"
        # the tail of the preictal recording is what got kept
        need = 48 * 60 * 256
        assert np.array_equal(mix.channels[:, :need], pre.channels[:, -need:])
        assert np.array_equal(mix.channels[:, need:], ict.channels)

    def test_exact_48min_plus_one_sample(self):
        pre = signal.synthesize_eeg(cfg(duration_s=48 * 60, channels=1), phase="preictal")
        ict = signal.Recording(
            patient_id="x", sample_rate_hz=256, channels=np.zeros((1, 1)), phase="ictal"
        )
        mix = signal.build_preictal(pre, ict)
        assert mix.n_samples == 48 * 60 * 256 + 1

    def test_too_short_preictal(self):
        pre = signal.synthesize_eeg(cfg(duration_s=47 * 60, channels=1), phase="preictal")
        ict = signal.synthesize_eeg(cfg(duration_s=60, channels=1), phase="ictal")
        with pytest.raises(InsufficientDataError):
            signal.build_preictal(pre, ict)

    def test_length_invariant(self):
        pre, ict = self._pair(pre_minutes=55, ict_minutes=2)
        mix = signal.build_preictal(pre, ict)
        assert mix.n_samples == 48 * 60 * 256 + ict.n_samples


class TestSampleTrainingWindow:
    def test_window_is_contiguous_slice(self):
        rec = signal.synthesize_eeg(cfg(duration_s=3600, channels=2, noise_sigma=0.5, seed=3))
        win = signal.sample_training_window(rec, 10, seed=5)
        assert win.n_samples == 10 * 60 * 256
        # locate the window in the source and check alignment
        starts = np.flatnonzero(rec.channels[0] == win.channels[0, 0])
        match = [
            s
            for s in starts
            if s % 2048 == 0 and np.array_equal(rec.channels[:, s : s + win.n_samples], win.channels)
        ]
        assert match

    def test_full_duration_identity(self):
        rec = signal.synthesize_eeg(cfg(duration_s=10 * 60, channels=1))
        assert signal.sample_training_window(rec, 10, seed=0) is rec

    def test_distinct_seeds_mostly_distinct_starts(self):
        rec = signal.synthesize_eeg(cfg(duration_s=3600, channels=1, noise_sigma=0.5, seed=4))
        starts = set()
        for s in range(40):
            win = signal.sample_training_window(rec, 10, seed=s)
            idx = np.flatnonzero(rec.channels[0] == win.channels[0, 0])
            starts.add(int(idx[0]))
        assert len(starts) > 1

    def test_too_short(self):
        rec = signal.synthesize_eeg(cfg(duration_s=60, channels=1))
        with pytest.raises(InsufficientDataError):
            signal.sample_training_window(rec, 10, seed=0)


class TestSegment:
    def test_24min_3ch_gives_three_2048x180(self):
        rec = signal.synthesize_eeg(cfg(duration_s=24 * 60, channels=3, noise_sigma=0.1))
        chunks = signal.segment(rec)
        assert len(chunks) == 3
        assert all(c.values.shape == (2048, 180) for c in chunks)
        assert [c.chunk_index for c in chunks] == [0, 1, 2]

    def test_below_one_segment_empty(self):
        rec = signal.synthesize_eeg(cfg(duration_s=7, channels=1))
        assert signal.segment(rec) == []

    def test_reassembly_oracle_1ch(self):
        rec = signal.synthesize_eeg(cfg(duration_s=16 * 60, channels=1, noise_sigma=0.3, seed=6))
        chunks = signal.segment(rec)
        assert len(chunks) == 2 and chunks[0].values.shape == (2048, 60)
        rebuilt = np.concatenate([c.values.T.reshape(-1) for c in chunks])
        assert np.array_equal(rebuilt, rec.channels[0])

    def test_reassembly_oracle_multichannel(self):
        rec = signal.synthesize_eeg(cfg(duration_s=8 * 60, channels=3, noise_sigma=0.2, seed=8))
        chunk = signal.segment(rec)[0]
        for ch in range(3):
            rebuilt = np.concatenate([chunk.segment(ch, s) for s in range(60)])
            assert np.array_equal(rebuilt, rec.channels[ch][: len(rebuilt)])


class TestCsv:
    def test_roundtrip_value_identical(self, tmp_path):
        rec = signal.synthesize_eeg(cfg(duration_s=8, channels=3, noise_sigma=1.0, seed=11), phase="mixed")
        rec = signal.Recording(
            patient_id="p1", sample_rate_hz=256, channels=rec.channels, phase="mixed", onset_index=100
        )
        path = tmp_path / "r.csv"
        signal.save_csv(rec, path)
        back = signal.load_csv(path)
        assert np.array_equal(back.channels, rec.channels)
        assert (back.sample_rate_hz, back.phase, back.onset_index, back.patient_id) == (
            256,
            "mixed",
            100,
            "p1",
        )
        # a second save is byte-identical
        path2 = tmp_path / "r2.csv"
        signal.save_csv(back, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_basic_load(self, tmp_path):
        path = tmp_path / "r.csv"
        rows = "\n".join("0.5,1.5,-2.5" for _ in range(2048))
        path.write_text(f"sample_rate_hz=256,channels=3,phase=interictal\n{rows}\n")
        rec = signal.load_csv(path)
        assert rec.n_channels == 3 and rec.n_samples == 2048

    def test_ragged_row_names_line(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("sample_rate_hz=256,channels=3,phase=interictal\n1,2,3\n1,2\n")
        with pytest.raises(ParseError) as exc:
            signal.load_csv(path)
        assert exc.value.line == 3

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("sample_rate_hz=256,channels=2,phase=interictal\n1,x\n")
        with pytest.raises(ParseError) as exc:
            signal.load_csv(path)
        assert exc.value.line == 2

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("sample_rate_hz=256,channels=2\n1,2\n")
        with pytest.raises(ParseError) as exc:
            signal.load_csv(path)
        assert exc.value.line == 1
