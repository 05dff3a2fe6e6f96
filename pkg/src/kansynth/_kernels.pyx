# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled layer-evaluation kernel. See ``_fallback.py`` for the packed format."""

import numpy as np

from libc.math cimport exp, tanh

cdef enum:
    K_AFFINE = 0
    K_POLY = 1
    K_SILU = 2
    K_TANH = 3
    K_RELU = 4
    K_SPLINE = 5
    K_COMPOSITE = 6
    K_EXTERNAL = 7
    MAX_ORDER = 64

AFFINE = K_AFFINE
POLY = K_POLY
SILU = K_SILU
TANH = K_TANH
RELU = K_RELU
SPLINE = K_SPLINE
COMPOSITE = K_COMPOSITE
EXTERNAL = K_EXTERNAL
MAX_SPLINE_DEGREE = MAX_ORDER - 1

NAME = "cython"


cdef inline double _base(int code, double t) noexcept nogil:
    if code == K_SILU:
        return t / (1.0 + exp(-t))
    if code == K_TANH:
        return tanh(t)
    return t if t > 0.0 else 0.0


cdef inline double _deboor(const double[::1] params, Py_ssize_t off, double t) noexcept nogil:
    cdef int k = <int>params[off]
    cdef Py_ssize_t n = <Py_ssize_t>params[off + 1]
    cdef Py_ssize_t ext0 = off + 2
    cdef Py_ssize_t c0 = off + 2 + n
    cdef Py_ssize_t lo, hi, mid, s, i
    cdef int r, j
    cdef double alpha
    cdef double d[MAX_ORDER]
    # upper_bound(t) - 1, clamped to [k, n-k-2]
    lo = 0
    hi = n
    while lo < hi:
        mid = (lo + hi) >> 1
        if params[ext0 + mid] <= t:
            lo = mid + 1
        else:
            hi = mid
    s = lo - 1
    if s < k:
        s = k
    if s > n - k - 2:
        s = n - k - 2
    for j in range(k + 1):
        d[j] = params[c0 + s - k + j]
    for r in range(1, k + 1):
        for j in range(k, r - 1, -1):
            i = s - k + j
            alpha = (t - params[ext0 + i]) / (params[ext0 + i + k + 1 - r] - params[ext0 + i])
            d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j]
    return d[k]


cdef inline double _edge(int code, const double[::1] params, Py_ssize_t off, double t,
                         const double[:, ::1] ext_vals, Py_ssize_t p) noexcept nogil:
    cdef Py_ssize_t d, i
    cdef double acc
    if code == K_AFFINE:
        return t * params[off] + params[off + 1]
    if code == K_POLY:
        d = <Py_ssize_t>params[off]
        acc = params[off + 1 + d]
        for i in range(d - 1, -1, -1):
            acc = acc * t + params[off + 1 + i]
        return acc
    if code == K_SILU or code == K_TANH or code == K_RELU:
        return params[off] * _base(code, t)
    if code == K_SPLINE:
        return _deboor(params, off, t)
    if code == K_COMPOSITE:
        return (params[off] * (params[off + 2] * _base(<int>params[off + 1], t))
                + params[off + 3] * _deboor(params, off + 4, t))
    return ext_vals[p, <Py_ssize_t>params[off]]


def eval_layer(const double[:, ::1] h, const long long[::1] row_ptr, const long long[::1] col,
               const int[::1] kind, const long long[::1] poff, const double[::1] params,
               const double[:, ::1] ext_vals):
    """Evaluate one packed layer on a batch ``h`` of shape (points, in_width)."""
    cdef Py_ssize_t npts = h.shape[0]
    cdef Py_ssize_t width = row_ptr.shape[0] - 1
    out_arr = np.zeros((npts, width))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t p, k, e
    cdef double acc
    with nogil:
        for p in range(npts):
            for k in range(width):
                acc = 0.0
                for e in range(row_ptr[k], row_ptr[k + 1]):
                    acc = acc + _edge(kind[e], params, poff[e], h[p, col[e]], ext_vals, p)
                out[p, k] = acc
    return out_arr
