"""Wavelet-packet features from denoised 8-second segments.

Each segment channel is expanded to a level-4 wavelet packet tree (16
sub-bands at 8 Hz bandwidth for 256 Hz data) and every leaf contributes
four statistics: mean absolute value, average power, standard deviation,
and the MAV ratio to the next leaf (the last leaf wraps around to leaf 0;
a zero denominator yields ratio 0). Values are concatenated channel-major,
leaf-major, statistic-major.
"""

from dataclasses import dataclass

import numpy as np

from szpred import mspca, wavelet
from szpred.errors import ShapeError

STATISTICS = ("mav", "power", "std", "mavratio")
DEFAULT_LEVEL = 4

LABELS = ("interictal", "preictal")
# every non-interictal source phase trains the alarm-positive class
PHASE_TO_LABEL = {"interictal": "interictal", "preictal": "preictal", "mixed": "preictal", "ictal": "preictal"}


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    names: tuple


@dataclass(frozen=True)
class FeatureTable:
    """Rectangular feature matrix with one class label per row."""

    values: np.ndarray  # (n_rows, n_features)
    labels: tuple  # label strings, len n_rows
    names: tuple  # feature names, len n_features

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ShapeError(f"values must be 2-D, got shape {v.shape}")
        if len(self.labels) != v.shape[0] or len(self.names) != v.shape[1]:
            raise ShapeError("labels/names lengths do not match the value matrix")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]

    def y(self):
        """Labels as uint8: 0 interictal, 1 preictal."""
        return np.fromiter((LABELS.index(l) for l in self.labels), dtype=np.uint8, count=self.n_rows)


def feature_names(channels, level=DEFAULT_LEVEL):
    n_leaves = 1 << level
    return tuple(
        f"ch{c}_band{l:02d}_{stat}"
        for c in range(channels)
        for l in range(n_leaves)
        for stat in STATISTICS
    )


def _leaf_statistics(leaf_mav, leaf_power, leaf_std):
    """Interleave per-leaf stats (arrays shaped (n_leaves, m)) into the
    (leaf-major, statistic-major) layout, per column."""
    n_leaves, m = leaf_mav.shape
    ratio_den = np.roll(leaf_mav, -1, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(ratio_den > 0, leaf_mav / np.where(ratio_den > 0, ratio_den, 1.0), 0.0)
    stacked = np.stack([leaf_mav, leaf_power, leaf_std, ratio], axis=1)  # (leaves, stats, m)
    return stacked.reshape(n_leaves * len(STATISTICS), m)


def extract_segment_features(segment_channels, filt=None, level=DEFAULT_LEVEL):
    """Feature vector of one segment given per-channel sample sequences."""
    if filt is None:
        filt = wavelet.filter_bank("db4")
    chans = np.asarray(segment_channels, dtype=np.float64)
    if chans.ndim != 2:
        raise ShapeError(f"expected (channels, samples), got shape {chans.shape}")
    n_ch, n = chans.shape
    if n % (1 << level) != 0:
        raise ShapeError(f"segment length {n} not divisible by 2^{level}")
    leaves = wavelet.wpd_columns(chans.T, filt, level)  # (leaves, coeffs, channels)
    mav = np.mean(np.abs(leaves), axis=1)
    power = np.mean(leaves**2, axis=1)
    std = np.std(leaves, axis=1)
    block = _leaf_statistics(mav, power, std)  # (leaves*stats, channels)
    values = block.T.reshape(-1)  # channel-major
    return FeatureVector(values=values, names=feature_names(n_ch, level))


def chunk_feature_rows(chunk, filt=None, level=DEFAULT_LEVEL, denoise=True):
    """All 60 per-segment feature vectors of one chunk, MSPCA-denoised first.

    Returns an (segments_per_chunk, n_features) array in segment order.
    """
    if filt is None:
        filt = wavelet.filter_bank("db4")
    values = mspca.mspca_denoise(chunk.values, filt, levels=level) if denoise else chunk.values
    leaves = wavelet.wpd_columns(values, filt, level)  # (leaves, coeffs, segs*chans)
    mav = np.mean(np.abs(leaves), axis=1)
    power = np.mean(leaves**2, axis=1)
    std = np.std(leaves, axis=1)
    block = _leaf_statistics(mav, power, std)  # (leaves*stats, segs*chans)
    per_col = block.T.reshape(chunk.channel_count, chunk.segments_per_chunk, -1)
    # rows are segments; concatenate channels along the feature axis
    return np.ascontiguousarray(np.concatenate([per_col[c] for c in range(chunk.channel_count)], axis=1))


def build_feature_table(chunks, filt=None, level=DEFAULT_LEVEL):
    """FeatureTable over a chunk collection, rows in (chunk, segment) order."""
    if filt is None:
        filt = wavelet.filter_bank("db4")
    chunks = list(chunks)
    if not chunks:
        return FeatureTable(values=np.empty((0, 0)), labels=(), names=())
    first = chunks[0]
    names = feature_names(first.channel_count, level)
    blocks, labels = [], []
    for chunk in chunks:
        if chunk.channel_count != first.channel_count or chunk.segment_length != first.segment_length:
            raise ShapeError("chunks do not share geometry")
        blocks.append(chunk_feature_rows(chunk, filt, level))
        labels.extend([PHASE_TO_LABEL[chunk.source_phase]] * chunk.segments_per_chunk)
    return FeatureTable(values=np.concatenate(blocks, axis=0), labels=tuple(labels), names=names)


def save_table_csv(table, path):
    """CSV export: feature-name header plus a trailing `label` column."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(table.names) + ",label\n")
        for row, label in zip(table.values, table.labels):
            fh.write(",".join(repr(float(v)) for v in row) + f",{label}\n")
