"""NumPy fallback for the hot kernels.

Same contracts as the Cython versions in ``_cykernels.pyx``; used when the
compiled extension is unavailable.
"""

import numpy as np

BACKEND = "python"


def dwt_level(x, lo, hi):
    """One analysis level of the two-channel filter bank, row-wise.

    x: (m, n) array, each row an even-length signal (n >= len(lo)).
    Returns (approx, detail), each (m, n // 2), computed as
    w[i] = sum_t x[(2i - t) mod n] * f[t] with periodic extension.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[1]
    half = n // 2
    src = (2 * np.arange(half)[:, None] - np.arange(len(lo))[None, :]) % n
    gathered = x[:, src]  # (m, half, L)
    return gathered @ lo, gathered @ hi


def idwt_level(approx, detail, lo, hi):
    """Inverse of :func:`dwt_level` for orthonormal filter pairs.

    x[k] = sum_i approx[i] * lo[(2i - k) mod n] + detail[i] * hi[(2i - k) mod n]
    """
    approx = np.ascontiguousarray(approx, dtype=np.float64)
    detail = np.ascontiguousarray(detail, dtype=np.float64)
    m, half = approx.shape
    n = 2 * half
    out = np.zeros((m, n))
    base = 2 * np.arange(half)
    # For fixed tap t the target columns (2i - t) mod n are all distinct,
    # so plain fancy-index addition is safe.
    for t in range(len(lo)):
        cols = (base - t) % n
        out[:, cols] += approx * lo[t] + detail * hi[t]
    return out


def best_split(values, labels, min_leaf):
    """Best Gini split over a feature matrix.

    values: (n, p) float64; labels: (n,) uint8 in {0, 1}.
    Returns (feature, threshold, gain); feature is -1 when no candidate
    split exists (no feature has two distinct values with min_leaf rows on
    each side). Zero-gain candidates are eligible: symmetric patterns such
    as XOR need them to become separable deeper down. Ties resolve to the
    lowest feature index, then the lowest threshold.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    n, p = values.shape
    total_pos = int(labels.sum())
    parent = _gini(total_pos, n)

    best_feat = -1
    best_thr = 0.0
    best_gain = -np.inf
    for j in range(p):
        order = np.argsort(values[:, j], kind="stable")
        v = values[order, j]
        y = labels[order]
        pos_left = np.cumsum(y)[:-1].astype(np.float64)
        n_left = np.arange(1, n, dtype=np.float64)
        n_right = n - n_left
        pos_right = total_pos - pos_left
        gini_left = 1.0 - (pos_left / n_left) ** 2 - ((n_left - pos_left) / n_left) ** 2
        gini_right = (
            1.0 - (pos_right / n_right) ** 2 - ((n_right - pos_right) / n_right) ** 2
        )
        gain = parent - (n_left * gini_left + n_right * gini_right) / n
        valid = (v[:-1] < v[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        gain = np.where(valid, gain, -np.inf)
        s = int(np.argmax(gain))
        if gain[s] > best_gain:
            best_gain = float(gain[s])
            best_feat = j
            best_thr = (v[s] + v[s + 1]) / 2.0
    if best_feat < 0:
        return -1, 0.0, 0.0
    return best_feat, best_thr, best_gain


def _gini(pos, total):
    if total == 0:
        return 0.0
    q = pos / total
    return 1.0 - q * q - (1.0 - q) * (1.0 - q)
