# cython: language_level=3
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from scipy.special.cython_special cimport ndtri

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def standard_normals(keys, Py_ssize_t start, Py_ssize_t count):
    cdef const uint64_t[:] k = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef Py_ssize_t p_count = k.shape[0]
    out = np.empty((p_count, count), dtype=np.float64)
    cdef double[:, :] o = out
    cdef Py_ssize_t p, s
    cdef uint64_t v
    with nogil:
        for p in range(p_count):
            for s in range(count):
                v = _mix(k[p] + <uint64_t>(start + s + 1) * GOLDEN)
                o[p, s] = ndtri((<double>(v >> 11) + 0.5) * TWO_M53)
    return out


def coarsen_sum(incr, Py_ssize_t factor):
    cdef const double[:, :, :] a = np.ascontiguousarray(incr, dtype=np.float64)
    cdef Py_ssize_t p_count = a.shape[0], n = a.shape[1], d = a.shape[2]
    cdef Py_ssize_t nc = n // factor
    out = np.empty((p_count, nc, d), dtype=np.float64)
    cdef double[:, :, :] o = out
    cdef Py_ssize_t p, c, q, j
    cdef double acc
    with nogil:
        for p in range(p_count):
            for c in range(nc):
                for j in range(d):
                    acc = a[p, c * factor, j]
                    for q in range(1, factor):
                        acc = acc + a[p, c * factor + q, j]
                    o[p, c, j] = acc
    return out


cdef inline double _em_value(const double[:, :, :] y, const double[:, :, :] b,
                             const double[:, :, :, :] s, const double[:, :, :] w,
                             Py_ssize_t p, Py_ssize_t c, Py_ssize_t k, Py_ssize_t i,
                             Py_ssize_t r, double dt, Py_ssize_t m) noexcept nogil:
    cdef double v = y[p, c, i] + b[p, c, i] * dt
    cdef Py_ssize_t j
    for j in range(m):
        v = v + s[p, c, i, j] * (w[p, k, j] - w[p, c * r, j])
    return v


def em_fill(y_grid, drift, diff, w, Py_ssize_t r, double h):
    cdef const double[:, :, :] y = np.asarray(y_grid, dtype=np.float64)
    cdef const double[:, :, :] b = np.asarray(drift, dtype=np.float64)
    cdef const double[:, :, :, :] s = np.asarray(diff, dtype=np.float64)
    cdef const double[:, :, :] ww = np.asarray(w, dtype=np.float64)
    cdef Py_ssize_t p_count = y.shape[0], nc = y.shape[1], n = y.shape[2]
    cdef Py_ssize_t nf = ww.shape[1] - 1, m = ww.shape[2]
    out = np.empty((p_count, nf + 1, n), dtype=np.float64)
    cdef double[:, :, :] o = out
    cdef Py_ssize_t p, k, c, i
    cdef double dt
    with nogil:
        for p in range(p_count):
            for k in range(nf + 1):
                c = k // r
                if c > nc - 1:
                    c = nc - 1
                dt = (k - c * r) * h
                for i in range(n):
                    o[p, k, i] = _em_value(y, b, s, ww, p, c, k, i, r, dt, m)
    return out


def em_sup_sq(y_grid, drift, diff, w, ref, Py_ssize_t r, double h):
    cdef const double[:, :, :] y = np.asarray(y_grid, dtype=np.float64)
    cdef const double[:, :, :] b = np.asarray(drift, dtype=np.float64)
    cdef const double[:, :, :, :] s = np.asarray(diff, dtype=np.float64)
    cdef const double[:, :, :] ww = np.asarray(w, dtype=np.float64)
    cdef const double[:, :, :] x = np.asarray(ref, dtype=np.float64)
    cdef Py_ssize_t p_count = y.shape[0], nc = y.shape[1], n = y.shape[2]
    cdef Py_ssize_t nf = ww.shape[1] - 1, m = ww.shape[2]
    out = np.empty(p_count, dtype=np.float64)
    cdef double[:] o = out
    cdef Py_ssize_t p, k, c, i
    cdef double dt, acc, best, d
    with nogil:
        for p in range(p_count):
            best = -1.0
            for k in range(nf + 1):
                c = k // r
                if c > nc - 1:
                    c = nc - 1
                dt = (k - c * r) * h
                d = _em_value(y, b, s, ww, p, c, k, 0, r, dt, m) - x[p, k, 0]
                acc = d * d
                for i in range(1, n):
                    d = _em_value(y, b, s, ww, p, c, k, i, r, dt, m) - x[p, k, i]
                    acc = acc + d * d
                # NaN must win, as in numpy's max
                if acc > best or acc != acc:
                    best = acc
                    if acc != acc:
                        break
            o[p] = best
    return out
