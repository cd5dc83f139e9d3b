# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: filter-bank level transforms and the CART split scan.

All loops release the GIL so the thread-pool executor gets real CPU
parallelism. Contracts mirror ``_pykernels``.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def dwt_level(x, lo, hi):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] xa = \
        np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] loa = \
        np.ascontiguousarray(lo, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] hia = \
        np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t m = xa.shape[0], n = xa.shape[1], L = loa.shape[0]
    cdef Py_ssize_t half = n // 2
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] approx = \
        np.empty((m, half), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] detail = \
        np.empty((m, half), dtype=np.float64)
    cdef double[:, ::1] xv = xa
    cdef double[:, ::1] av = approx
    cdef double[:, ::1] dv = detail
    cdef double[::1] lov = loa
    cdef double[::1] hiv = hia
    cdef Py_ssize_t r, i, t, src
    cdef double sa, sd, xs
    with nogil:
        for r in range(m):
            for i in range(half):
                sa = 0.0
                sd = 0.0
                for t in range(L):
                    src = (2 * i - t) % n
                    if src < 0:  # C remainder keeps the dividend's sign
                        src += n
                    xs = xv[r, src]
                    sa += xs * lov[t]
                    sd += xs * hiv[t]
                av[r, i] = sa
                dv[r, i] = sd
    return approx, detail


def idwt_level(approx, detail, lo, hi):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] aa = \
        np.ascontiguousarray(approx, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] da = \
        np.ascontiguousarray(detail, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] loa = \
        np.ascontiguousarray(lo, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] hia = \
        np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t m = aa.shape[0], half = aa.shape[1], L = loa.shape[0]
    cdef Py_ssize_t n = 2 * half
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] out = \
        np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] av = aa
    cdef double[:, ::1] dv = da
    cdef double[:, ::1] ov = out
    cdef double[::1] lov = loa
    cdef double[::1] hiv = hia
    cdef Py_ssize_t r, i, t, dst
    cdef double a, d
    with nogil:
        for r in range(m):
            for i in range(half):
                a = av[r, i]
                d = dv[r, i]
                for t in range(L):
                    dst = (2 * i - t) % n
                    if dst < 0:
                        dst += n
                    ov[r, dst] += a * lov[t] + d * hiv[t]
    return out


def best_split(values, labels, min_leaf):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] va = \
        np.ascontiguousarray(values, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, mode="c"] ya = \
        np.ascontiguousarray(labels, dtype=np.uint8)
    cdef Py_ssize_t n = va.shape[0], p = va.shape[1]
    cdef Py_ssize_t ml = min_leaf
    # one argsort per feature; sorting stays in numpy, the scan is compiled
    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] order = \
        np.argsort(va, axis=0, kind="stable").astype(np.int64)
    cdef double[:, ::1] vv = va
    cdef cnp.uint8_t[::1] yv = ya
    cdef cnp.int64_t[:, ::1] ov = order
    cdef Py_ssize_t total_pos = 0, i, j, s, idx
    cdef double parent, q, gini_l, gini_r, gain
    cdef double best_gain = -np.inf, best_thr = 0.0
    cdef Py_ssize_t best_feat = -1
    cdef double pos_l, n_l, n_r, pos_r, dn = <double> n
    cdef double v_prev, v_cur
    with nogil:
        for i in range(n):
            total_pos += yv[i]
        q = total_pos / dn
        parent = 1.0 - q * q - (1.0 - q) * (1.0 - q)
        for j in range(p):
            pos_l = 0.0
            for s in range(1, n):
                idx = ov[s - 1, j]
                pos_l += yv[idx]
                v_prev = vv[idx, j]
                v_cur = vv[ov[s, j], j]
                if v_prev >= v_cur:
                    continue
                n_l = <double> s
                n_r = dn - n_l
                if n_l < ml or n_r < ml:
                    continue
                pos_r = total_pos - pos_l
                q = pos_l / n_l
                gini_l = 1.0 - q * q - (1.0 - q) * (1.0 - q)
                q = pos_r / n_r
                gini_r = 1.0 - q * q - (1.0 - q) * (1.0 - q)
                gain = parent - (n_l * gini_l + n_r * gini_r) / dn
                if gain > best_gain:
                    best_gain = gain
                    best_feat = j
                    best_thr = (v_prev + v_cur) / 2.0
    if best_feat < 0:
        return -1, 0.0, 0.0
    return best_feat, best_thr, best_gain
