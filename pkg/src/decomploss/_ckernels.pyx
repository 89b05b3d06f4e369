# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled moving-average kernel; see _kernels_py for the reference version.

Same per-element summation order as the numpy code (first window element,
then += the rest left to right, then one divide), so results are bitwise
equal. Speed comes from working one (T, C) slab at a time while it is in
cache and from a flat inner loop over the unclamped interior.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _clamp(Py_ssize_t v, Py_ssize_t hi) noexcept nogil:
    if v < 0:
        return 0
    if v > hi:
        return hi
    return v


def moving_average_3d(const double[:, :, ::1] x, Py_ssize_t kernel):
    cdef Py_ssize_t n = x.shape[0], t = x.shape[1], c = x.shape[2]
    cdef Py_ssize_t half = (kernel - 1) // 2
    cdef Py_ssize_t i, s, ch, j, shift, lo, hi, q, span
    cdef double k = <double>kernel
    cdef const double* xp
    cdef const double* src
    cdef double* op
    cdef double* dst
    out_arr = np.empty((n, t, c), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    if n == 0 or t == 0 or c == 0:
        return out_arr
    with nogil:
        for i in range(n):
            xp = &x[i, 0, 0]
            op = &out[i, 0, 0]
            for s in range(t):
                src = xp + _clamp(s - half, t - 1) * c
                for ch in range(c):
                    op[s * c + ch] = src[ch]
            for j in range(1, kernel):
                shift = j - half
                # rows s with 0 <= s + shift <= t - 1 need no clamping
                lo = _clamp(-shift, t)
                hi = _clamp(t - shift, t)
                if hi < lo:
                    hi = lo
                for s in range(lo):
                    src = xp + _clamp(s + shift, t - 1) * c
                    for ch in range(c):
                        op[s * c + ch] += src[ch]
                span = (hi - lo) * c
                dst = op + lo * c
                src = xp + (lo + shift) * c
                for q in range(span):
                    dst[q] += src[q]
                for s in range(hi, t):
                    src = xp + _clamp(s + shift, t - 1) * c
                    for ch in range(c):
                        op[s * c + ch] += src[ch]
            for q in range(t * c):
                op[q] = op[q] / k
    return out_arr
