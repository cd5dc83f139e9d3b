import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from szpred import wavelet
from szpred.errors import ParameterError, ShapeError

SQRT2 = np.sqrt(2.0)


def naive_dwt_level(x, lo, hi):
    """Direct periodic convolution-and-downsample oracle for Eqs. (2)-(3):
    w[i] = sum_k x[k] * f[2i - k], indices mod len(x)."""
    n = len(x)
    half = n // 2
    approx = np.zeros(half)
    detail = np.zeros(half)
    for i in range(half):
        for t in range(len(lo)):
            approx[i] += x[(2 * i - t) % n] * lo[t]
            detail[i] += x[(2 * i - t) % n] * hi[t]
    return approx, detail


class TestFilterPair:
    def test_builtins_satisfy_invariants(self):
        for name in ("haar", "db4"):
            f = wavelet.filter_bank(name)
            assert len(f.lowpass) % 2 == 0
            assert abs(f.lowpass.sum() - SQRT2) < 1e-10
            assert abs(f.highpass.sum()) < 1e-10
            signs = (-1.0) ** np.arange(len(f))
            assert np.max(np.abs(f.highpass - signs * f.lowpass[::-1])) < 1e-10

    def test_unknown_name(self):
        with pytest.raises(ParameterError):
            wavelet.filter_bank("sym5")

    def test_bad_lowpass_rejected(self):
        with pytest.raises(ParameterError):
            wavelet.FilterPair(
                lowpass=np.array([1.0, 1.0]), highpass=np.array([1.0, -1.0]), name="x"
            )


class TestDwt:
    def test_haar_two_samples_closed_form(self):
        f = wavelet.filter_bank("haar")
        dec = wavelet.dwt(np.array([4.0, 2.0]), f, 1)
        assert dec.approximation == pytest.approx([3 * SQRT2], abs=1e-12)
        assert dec.details[0] == pytest.approx([SQRT2], abs=1e-12)

    @pytest.mark.parametrize("name", ["haar", "db4"])
    def test_constant_sequence_zero_details(self, name):
        f = wavelet.filter_bank(name)
        dec = wavelet.dwt(np.full(64, 3.25), f, 3)
        for d in dec.details:
            assert np.max(np.abs(d)) < 1e-10

    def test_matches_naive_convolution_oracle(self):
        f = wavelet.filter_bank("db4")
        rng = np.random.default_rng(7)
        x = rng.normal(size=2048)
        dec = wavelet.dwt(x, f, 4)
        cur = x
        for j in range(4):
            approx, detail = naive_dwt_level(cur, f.lowpass, f.highpass)
            assert np.max(np.abs(dec.details[j] - detail)) < 1e-10
            cur = approx
        assert np.max(np.abs(dec.approximation - cur)) < 1e-10

    def test_shape_and_parameter_errors(self):
        f = wavelet.filter_bank("db4")
        with pytest.raises(ShapeError):
            wavelet.dwt(np.zeros(100), f, 3)  # not divisible by 8
        with pytest.raises(ParameterError):
            wavelet.dwt(np.zeros(64), f, 0)
        with pytest.raises(ShapeError):
            wavelet.dwt(np.zeros(4), f, 1)  # shorter than the filter

    def test_level_lengths(self):
        f = wavelet.filter_bank("haar")
        dec = wavelet.dwt(np.arange(256.0), f, 4)
        assert [len(d) for d in dec.details] == [128, 64, 32, 16]
        assert len(dec.approximation) == 16


class TestIdwt:
    def test_haar_inverse_closed_form(self):
        f = wavelet.filter_bank("haar")
        dec = wavelet.DwtDecomposition(
            details=(np.array([SQRT2]),),
            approximation=np.array([3 * SQRT2]),
            levels=1,
            original_length=2,
            filter_name="haar",
        )
        assert wavelet.idwt(dec, f) == pytest.approx([4.0, 2.0], abs=1e-12)

    def test_zero_coefficients_give_zero_signal(self):
        f = wavelet.filter_bank("db4")
        dec = wavelet.DwtDecomposition(
            details=(np.zeros(32), np.zeros(16)),
            approximation=np.zeros(16),
            levels=2,
            original_length=64,
            filter_name="db4",
        )
        assert np.max(np.abs(wavelet.idwt(dec, f))) == 0.0

    def test_roundtrip_100_random_signals(self):
        rng = np.random.default_rng(3)
        for name in ("haar", "db4"):
            f = wavelet.filter_bank(name)
            worst = 0.0
            for i in range(100):
                x = rng.normal(size=2048)
                levels = 1 + i % 4
                rebuilt = wavelet.idwt(wavelet.dwt(x, f, levels), f)
                worst = max(worst, np.max(np.abs(rebuilt - x)) / np.max(np.abs(x)))
            assert worst < 1e-8

    def test_level_mismatch_raises(self):
        f = wavelet.filter_bank("haar")
        dec = wavelet.dwt(np.arange(64.0), f, 2)
        bad = wavelet.DwtDecomposition(
            details=dec.details,
            approximation=dec.approximation[:8],
            levels=2,
            original_length=64,
            filter_name="haar",
        )
        with pytest.raises(ShapeError):
            wavelet.idwt(bad, f)


class TestWpd:
    def test_leaf_count_is_2_to_k(self):
        f = wavelet.filter_bank("haar")
        for k in range(1, 7):
            tree = wavelet.wpd(np.arange(2048.0), f, k)
            assert len(tree.leaves) == 2**k
            assert all(len(leaf) == 2048 // 2**k for leaf in tree.leaves)

    def test_level1_equals_dwt(self):
        f = wavelet.filter_bank("db4")
        x = np.random.default_rng(0).normal(size=256)
        tree = wavelet.wpd(x, f, 1)
        dec = wavelet.dwt(x, f, 1)
        assert np.array_equal(tree.leaves[0], dec.approximation)
        assert np.array_equal(tree.leaves[1], dec.details[0])

    def test_energy_conservation(self):
        f = wavelet.filter_bank("db4")
        x = np.random.default_rng(1).normal(size=2048)
        for k in range(1, 5):
            tree = wavelet.wpd(x, f, k)
            energy = sum(float(np.sum(leaf**2)) for leaf in tree.leaves)
            assert energy == pytest.approx(float(np.sum(x**2)), rel=1e-8)

    def test_iwpd_roundtrip_and_zero_tree(self):
        f = wavelet.filter_bank("db4")
        rng = np.random.default_rng(4)
        worst = 0.0
        for i in range(100):
            x = rng.normal(size=2048)
            tree = wavelet.wpd(x, f, 4)
            worst = max(worst, np.max(np.abs(wavelet.iwpd(tree, f) - x)) / np.max(np.abs(x)))
        assert worst < 1e-8
        zero = wavelet.WpdTree(
            level=2, leaves=tuple(np.zeros(16) for _ in range(4)), original_length=64, filter_name="db4"
        )
        assert np.max(np.abs(wavelet.iwpd(zero, f))) == 0.0

    def test_iwpd_level1_equals_idwt(self):
        f = wavelet.filter_bank("haar")
        x = np.random.default_rng(2).normal(size=128)
        tree = wavelet.wpd(x, f, 1)
        dec = wavelet.dwt(x, f, 1)
        assert np.array_equal(wavelet.iwpd(tree, f), wavelet.idwt(dec, f))


class TestProperties:
    def test_linearity(self):
        f = wavelet.filter_bank("db4")
        rng = np.random.default_rng(5)
        x, y = rng.normal(size=256), rng.normal(size=256)
        a, b = 2.5, -1.25
        dx, dy, dz = (wavelet.dwt(s, f, 3) for s in (x, y, a * x + b * y))
        for j in range(3):
            assert np.max(np.abs(dz.details[j] - (a * dx.details[j] + b * dy.details[j]))) < 1e-10
        assert np.max(np.abs(dz.approximation - (a * dx.approximation + b * dy.approximation))) < 1e-10

    @settings(max_examples=30, deadline=None)
    @given(
        exponent=st.integers(min_value=5, max_value=11),
        levels=st.integers(min_value=1, max_value=4),
        name=st.sampled_from(["haar", "db4"]),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_perfect_reconstruction_property(self, exponent, levels, name, seed):
        f = wavelet.filter_bank(name)
        x = np.random.default_rng(seed).normal(size=2**exponent)
        rebuilt = wavelet.idwt(wavelet.dwt(x, f, levels), f)
        assert np.max(np.abs(rebuilt - x)) / np.max(np.abs(x)) < 1e-8

    def test_column_helpers_match_per_signal_transforms(self):
        f = wavelet.filter_bank("db4")
        rng = np.random.default_rng(6)
        X = rng.normal(size=(256, 5))
        details, approx = wavelet.dwt_columns(X, f, 3)
        for c in range(5):
            dec = wavelet.dwt(X[:, c], f, 3)
            for j in range(3):
                assert np.array_equal(details[j][:, c], dec.details[j])
            assert np.array_equal(approx[:, c], dec.approximation)
        back = wavelet.idwt_columns(details, approx, f)
        assert np.max(np.abs(back - X)) < 1e-8
        leaves = wavelet.wpd_columns(X, f, 2)
        for c in range(5):
            tree = wavelet.wpd(X[:, c], f, 2)
            for l in range(4):
                assert np.array_equal(leaves[l, :, c], tree.leaves[l])
