"""Discrete wavelet transform and wavelet packet decomposition.

Two-channel orthonormal filter banks with periodic signal extension, which
keeps the transform exactly orthogonal at every even length and therefore
gives perfect reconstruction on the dyadic segment sizes used throughout
the pipeline. Analysis follows

    detail[i] = sum_k x[k] * highpass[2*i - k]
    approx[i] = sum_k x[k] * lowpass[2*i - k]

with indices wrapped modulo the signal length; synthesis is the adjoint.
"""

from dataclasses import dataclass

import numpy as np

from szpred import _kernels
from szpred.errors import ParameterError, ShapeError

_SQRT2 = float(np.sqrt(2.0))

# Orthonormal scaling coefficients (lowpass sums to sqrt(2)).
_HAAR = (0.7071067811865476, 0.7071067811865476)
_DB4 = (
    0.23037781330885523,
    0.7148465705525415,
    0.6308807679295904,
    -0.02798376941698385,
    -0.18703481171888114,
    0.030841381835986965,
    0.032883011666982945,
    -0.010597401784997278,
)


@dataclass(frozen=True)
class FilterPair:
    """Lowpass/highpass analysis pair forming a quadrature mirror bank."""

    lowpass: np.ndarray
    highpass: np.ndarray
    name: str

    def __post_init__(self):
        lo = np.asarray(self.lowpass, dtype=np.float64)
        hi = np.asarray(self.highpass, dtype=np.float64)
        object.__setattr__(self, "lowpass", lo)
        object.__setattr__(self, "highpass", hi)
        if lo.ndim != 1 or lo.shape != hi.shape or len(lo) % 2 != 0:
            raise ParameterError("filter pair must be equal-length 1-D with even length")
        if abs(lo.sum() - _SQRT2) > 1e-10:
            raise ParameterError(f"lowpass must sum to sqrt(2), got {lo.sum()!r}")
        if abs(hi.sum()) > 1e-10:
            raise ParameterError(f"highpass must sum to 0, got {hi.sum()!r}")
        signs = (-1.0) ** np.arange(len(lo))
        if np.max(np.abs(hi - signs * lo[::-1])) > 1e-10:
            raise ParameterError("highpass is not the quadrature mirror of lowpass")

    def __len__(self):
        return len(self.lowpass)


def quadrature_pair(lowpass, name):
    """Build a FilterPair from lowpass coefficients via h[k] = (-1)^k l[L-1-k]."""
    lo = np.asarray(lowpass, dtype=np.float64)
    hi = ((-1.0) ** np.arange(len(lo))) * lo[::-1]
    return FilterPair(lowpass=lo, highpass=hi, name=name)


_BUILTIN = {"haar": _HAAR, "db4": _DB4}


def filter_bank(name="db4"):
    """Return a built-in filter pair by name ("haar" or "db4")."""
    try:
        return quadrature_pair(_BUILTIN[name], name)
    except KeyError:
        raise ParameterError(f"unknown filter {name!r}; built-ins: {sorted(_BUILTIN)}") from None


@dataclass(frozen=True)
class DwtDecomposition:
    details: tuple  # D_1 .. D_levels, coarser scales later
    approximation: np.ndarray
    levels: int
    original_length: int
    filter_name: str


@dataclass(frozen=True)
class WpdTree:
    level: int
    leaves: tuple  # 2**level sequences in natural filter-bank order
    original_length: int
    filter_name: str


def _check_input(x, filt, levels):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"expected 1-D signal, got shape {x.shape}")
    if levels < 1:
        raise ParameterError(f"levels must be >= 1, got {levels}")
    n = len(x)
    if n % (1 << levels) != 0:
        raise ShapeError(f"length {n} not divisible by 2^{levels}")
    if n < len(filt):
        raise ShapeError(f"length {n} shorter than filter ({len(filt)} taps)")
    return x


def dwt(x, filt, levels):
    """Multi-level DWT: each level re-decomposes the previous approximation."""
    x = _check_input(x, filt, levels)
    details = []
    approx = x[np.newaxis, :]
    for _ in range(levels):
        approx, detail = _kernels.dwt_level(approx, filt.lowpass, filt.highpass)
        details.append(detail[0])
    return DwtDecomposition(
        details=tuple(details),
        approximation=approx[0],
        levels=levels,
        original_length=len(x),
        filter_name=filt.name,
    )


def idwt(dec, filt):
    """Exact inverse of :func:`dwt` for the same filter pair."""
    expected = dec.original_length >> dec.levels
    if len(dec.approximation) != expected:
        raise ShapeError(
            f"approximation length {len(dec.approximation)} != {expected} "
            f"for {dec.levels} levels over {dec.original_length} samples"
        )
    x = np.asarray(dec.approximation, dtype=np.float64)[np.newaxis, :]
    for j in range(dec.levels, 0, -1):
        detail = np.asarray(dec.details[j - 1], dtype=np.float64)
        if detail.shape != x.shape[1:]:
            raise ShapeError(f"detail level {j} has length {detail.shape[0]}, expected {x.shape[1]}")
        x = _kernels.idwt_level(x, detail[np.newaxis, :], filt.lowpass, filt.highpass)
    return x[0]


def wpd(x, filt, level):
    """Full binary filter-bank expansion; leaf 0 is the all-lowpass path."""
    x = _check_input(x, filt, level)
    nodes = [x]
    for _ in range(level):
        nxt = []
        for node in nodes:
            lo, hi = _kernels.dwt_level(node[np.newaxis, :], filt.lowpass, filt.highpass)
            nxt.append(lo[0])
            nxt.append(hi[0])
        nodes = nxt
    return WpdTree(level=level, leaves=tuple(nodes), original_length=len(x), filter_name=filt.name)


def iwpd(tree, filt):
    """Exact inverse of :func:`wpd` for the same filter pair."""
    if len(tree.leaves) != 1 << tree.level:
        raise ShapeError(f"expected {1 << tree.level} leaves, got {len(tree.leaves)}")
    expected = tree.original_length >> tree.level
    nodes = [np.asarray(leaf, dtype=np.float64) for leaf in tree.leaves]
    for node in nodes:
        if len(node) != expected:
            raise ShapeError(f"leaf length {len(node)} != {expected}")
    for _ in range(tree.level):
        nodes = [
            _kernels.idwt_level(
                nodes[i][np.newaxis, :], nodes[i + 1][np.newaxis, :], filt.lowpass, filt.highpass
            )[0]
            for i in range(0, len(nodes), 2)
        ]
    return nodes[0]


# Column-batched variants. MSPCA and feature extraction transform every
# column of a segment matrix; doing that in one kernel call keeps the hot
# loop inside compiled code.


def dwt_columns(X, filt, levels):
    """Per-column DWT of an (n, p) matrix -> (details, approximation).

    details[j] has shape (n / 2^(j+1), p); approximation (n / 2^levels, p).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"expected 2-D matrix, got shape {X.shape}")
    n = X.shape[0]
    if levels < 1:
        raise ParameterError(f"levels must be >= 1, got {levels}")
    if n % (1 << levels) != 0:
        raise ShapeError(f"row count {n} not divisible by 2^{levels}")
    if n < len(filt):
        raise ShapeError(f"row count {n} shorter than filter ({len(filt)} taps)")
    rows = np.ascontiguousarray(X.T)
    details = []
    approx = rows
    for _ in range(levels):
        approx, detail = _kernels.dwt_level(approx, filt.lowpass, filt.highpass)
        details.append(detail.T)
    return details, approx.T


def idwt_columns(details, approximation, filt):
    """Inverse of :func:`dwt_columns`."""
    x = np.ascontiguousarray(np.asarray(approximation, dtype=np.float64).T)
    for detail in reversed(details):
        d = np.ascontiguousarray(np.asarray(detail, dtype=np.float64).T)
        if d.shape != x.shape:
            raise ShapeError(f"detail shape {d.shape} incompatible with {x.shape}")
        x = _kernels.idwt_level(x, d, filt.lowpass, filt.highpass)
    return x.T


def wpd_columns(X, filt, level):
    """Per-column WPD of an (n, p) matrix.

    Returns an array of shape (2^level, n / 2^level, p): leaf index (natural
    order) by coefficient index by column.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"expected 2-D matrix, got shape {X.shape}")
    n, p = X.shape
    if level < 1:
        raise ParameterError(f"level must be >= 1, got {level}")
    if n % (1 << level) != 0:
        raise ShapeError(f"row count {n} not divisible by 2^{level}")
    if n < len(filt):
        raise ShapeError(f"row count {n} shorter than filter ({len(filt)} taps)")
    nodes = [np.ascontiguousarray(X.T)]
    for _ in range(level):
        nxt = []
        for node in nodes:
            lo, hi = _kernels.dwt_level(node, filt.lowpass, filt.highpass)
            nxt.append(lo)
            nxt.append(hi)
        nodes = nxt
    return np.stack([node.T for node in nodes], axis=0)
