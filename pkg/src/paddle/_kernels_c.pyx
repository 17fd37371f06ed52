# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled single-pass implementations of the elementwise hot-loop kernels.

Mirrors ``_kernels_py``; the active implementation is picked in ``kernels``.
"""

from libc.math cimport fabs, sqrt

import numpy as np


cdef double[:, ::1] _as_view(object a):
    return np.ascontiguousarray(a, dtype=np.float64)


def soft_threshold(a, double lam):
    """Entrywise shrinkage sign(a) * max(|a| - lam, 0)."""
    cdef double[:, ::1] src = _as_view(a)
    out = np.empty((src.shape[0], src.shape[1]), dtype=np.float64)
    cdef double[:, ::1] dst = out
    cdef Py_ssize_t i, j
    cdef double v, m
    for i in range(src.shape[0]):
        for j in range(src.shape[1]):
            v = src[i, j]
            m = fabs(v) - lam
            if m <= 0.0:
                dst[i, j] = 0.0
            elif v > 0.0:
                dst[i, j] = m
            else:
                dst[i, j] = -m
    return out


def forward_step(point, grad, double step):
    """Gradient step point - step * grad."""
    cdef double[:, ::1] p = _as_view(point)
    cdef double[:, ::1] g = _as_view(grad)
    out = np.empty((p.shape[0], p.shape[1]), dtype=np.float64)
    cdef double[:, ::1] dst = out
    cdef Py_ssize_t i, j
    for i in range(p.shape[0]):
        for j in range(p.shape[1]):
            dst[i, j] = p[i, j] - step * g[i, j]
    return out


def combine_momentum(xi, xi_prev, double coef):
    """Extrapolation xi + coef * (xi - xi_prev)."""
    cdef double[:, ::1] cur = _as_view(xi)
    cdef double[:, ::1] prev = _as_view(xi_prev)
    out = np.empty((cur.shape[0], cur.shape[1]), dtype=np.float64)
    cdef double[:, ::1] dst = out
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(cur.shape[0]):
        for j in range(cur.shape[1]):
            v = cur[i, j]
            dst[i, j] = v + coef * (v - prev[i, j])
    return out


def project_columns(a):
    """Scale every column with Euclidean norm > 1 back onto the unit ball."""
    cdef double[:, ::1] src = _as_view(a)
    cdef Py_ssize_t rows = src.shape[0], cols = src.shape[1]
    out = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] dst = out
    sq = np.zeros(cols, dtype=np.float64)
    cdef double[::1] s = sq
    cdef double[::1] scale = np.empty(cols, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(rows):
        for j in range(cols):
            v = src[i, j]
            s[j] += v * v
    for j in range(cols):
        scale[j] = 1.0 / sqrt(s[j]) if s[j] > 1.0 else 1.0
    for i in range(rows):
        for j in range(cols):
            dst[i, j] = src[i, j] * scale[j]
    return out


def project_rows(a):
    """Scale every row with Euclidean norm > 1 back onto the unit ball."""
    cdef double[:, ::1] src = _as_view(a)
    cdef Py_ssize_t rows = src.shape[0], cols = src.shape[1]
    out = np.empty((rows, cols), dtype=np.float64)
    cdef double[:, ::1] dst = out
    cdef Py_ssize_t i, j
    cdef double acc, scale
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += src[i, j] * src[i, j]
        scale = 1.0 / sqrt(acc) if acc > 1.0 else 1.0
        for j in range(cols):
            dst[i, j] = src[i, j] * scale
    return out


def abs_sum(a):
    """Sum of absolute values, as a float."""
    cdef double[:, ::1] src = _as_view(a)
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(src.shape[0]):
        for j in range(src.shape[1]):
            acc += fabs(src[i, j])
    return acc
