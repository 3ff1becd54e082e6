# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Gram kernels; see ``_pykernels`` for the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

from .errors import SingularAverageMatrix

cnp.import_array()

SQEXP, MATERN12, MATERN32, MATERN52 = 0, 1, 3, 5

cdef double SQRT3 = sqrt(3.0)
cdef double SQRT5 = sqrt(5.0)


cdef inline double _profile(double r, int code) noexcept nogil:
    cdef double a
    if code == 0:
        return exp(-0.5 * r * r)
    if code == 1:
        return exp(-r)
    if code == 3:
        a = SQRT3 * r
        return (1.0 + a) * exp(-a)
    a = SQRT5 * r
    return (1.0 + a + a * a / 3.0) * exp(-a)


def sqdist_weighted(X1, X2, w):
    cdef const double[:, ::1] x1 = np.ascontiguousarray(X1, dtype=np.float64)
    cdef const double[:, ::1] x2 = np.ascontiguousarray(X2, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n1 = x1.shape[0], n2 = x2.shape[0], d = x1.shape[1]
    out = np.empty((n1, n2))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, k
    cdef double s, t
    with nogil:
        for i in range(n1):
            for j in range(n2):
                s = 0.0
                for k in range(d):
                    t = x1[i, k] - x2[j, k]
                    s = s + wv[k] * (t * t)
                o[i, j] = s
    return out


def sqdist_metric(X1, X2, M):
    cdef const double[:, ::1] x1 = np.ascontiguousarray(X1, dtype=np.float64)
    cdef const double[:, ::1] x2 = np.ascontiguousarray(X2, dtype=np.float64)
    cdef const double[:, ::1] m = np.ascontiguousarray(M, dtype=np.float64)
    cdef Py_ssize_t n1 = x1.shape[0], n2 = x2.shape[0], d = x1.shape[1]
    out = np.empty((n1, n2))
    cdef double[:, ::1] o = out
    cdef double[::1] diff = np.empty(d)
    cdef Py_ssize_t i, j, k, l
    cdef double s, row
    with nogil:
        for i in range(n1):
            for j in range(n2):
                for k in range(d):
                    diff[k] = x1[i, k] - x2[j, k]
                s = 0.0
                for k in range(d):
                    row = 0.0
                    for l in range(d):
                        row = row + m[k, l] * diff[l]
                    s = s + diff[k] * row
                o[i, j] = s
    return out


def profile(r, int code):
    if code not in (0, 1, 3, 5):
        raise ValueError(f"unknown profile code {code}")
    arr = np.asarray(r, dtype=np.float64)
    flat = np.ascontiguousarray(arr.ravel())
    cdef const double[::1] rv = flat
    out = np.empty(flat.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i, n = flat.shape[0]
    with nogil:
        for i in range(n):
            o[i] = _profile(rv[i], code)
    return out.reshape(arr.shape)


def paciorek_gram(X1, X2, S1, S2, a1, a2, int code):
    if code not in (0, 1, 3, 5):
        raise ValueError(f"unknown profile code {code}")
    cdef const double[:, ::1] x1 = np.ascontiguousarray(X1, dtype=np.float64)
    cdef const double[:, ::1] x2 = np.ascontiguousarray(X2, dtype=np.float64)
    cdef const double[:, :, ::1] s1 = np.ascontiguousarray(S1, dtype=np.float64)
    cdef const double[:, :, ::1] s2 = np.ascontiguousarray(S2, dtype=np.float64)
    cdef const double[::1] amp1 = np.ascontiguousarray(a1, dtype=np.float64)
    cdef const double[::1] amp2 = np.ascontiguousarray(a2, dtype=np.float64)
    cdef Py_ssize_t n1 = x1.shape[0], n2 = x2.shape[0], d = x1.shape[1]
    out = np.empty((n1, n2))
    cdef double[:, ::1] o = out
    cdef double[:, ::1] L = np.empty((d, d))
    cdef double[::1] z = np.empty(d)
    cdef Py_ssize_t i, j, k, l, p
    cdef double s, det, q
    cdef int bad = 0
    with nogil:
        for i in range(n1):
            for j in range(n2):
                # Cholesky of the averaged matrix, lower triangle only
                det = 1.0
                for k in range(d):
                    for l in range(k + 1):
                        s = 0.5 * (s1[i, k, l] + s2[j, k, l])
                        for p in range(l):
                            s = s - L[k, p] * L[l, p]
                        if k == l:
                            if s <= 0.0:
                                bad = 1
                                break
                            L[k, k] = sqrt(s)
                            det = det * s
                        else:
                            L[k, l] = s / L[l, l]
                    if bad:
                        break
                if bad or det < 1e-300:
                    bad = 1
                    break
                q = 0.0
                for k in range(d):
                    s = x1[i, k] - x2[j, k]
                    for p in range(k):
                        s = s - L[k, p] * z[p]
                    z[k] = s / L[k, k]
                    q = q + z[k] * z[k]
                o[i, j] = amp1[i] * amp2[j] / sqrt(det) * _profile(sqrt(q), code)
            if bad:
                break
    if bad:
        raise SingularAverageMatrix("averaged anisotropy matrix is singular")
    return out
