# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of `_wavelets_py`: same kernels, tight loops, no temporaries
beyond one scratch plane."""

import numpy as np

cimport numpy as cnp
from libc.math cimport hypot, sqrt

cnp.import_array()

BACKEND = "cython"

cdef double INV_SQRT2 = 1.0 / sqrt(2.0)


cdef void _analyze(double complex[:, ::1] a, Py_ssize_t size,
                   double complex[:, ::1] tmp) noexcept nogil:
    cdef Py_ssize_t i, j, half = size // 2
    for j in range(size):
        for i in range(half):
            tmp[i, j] = (a[2 * i, j] + a[2 * i + 1, j]) * INV_SQRT2
            tmp[half + i, j] = (a[2 * i, j] - a[2 * i + 1, j]) * INV_SQRT2
    for i in range(size):
        for j in range(half):
            a[i, j] = (tmp[i, 2 * j] + tmp[i, 2 * j + 1]) * INV_SQRT2
            a[i, half + j] = (tmp[i, 2 * j] - tmp[i, 2 * j + 1]) * INV_SQRT2


cdef void _synthesize(double complex[:, ::1] a, Py_ssize_t size,
                      double complex[:, ::1] tmp) noexcept nogil:
    cdef Py_ssize_t i, j, half = size // 2
    for i in range(size):
        for j in range(half):
            tmp[i, 2 * j] = (a[i, j] + a[i, half + j]) * INV_SQRT2
            tmp[i, 2 * j + 1] = (a[i, j] - a[i, half + j]) * INV_SQRT2
    for j in range(size):
        for i in range(half):
            a[2 * i, j] = (tmp[i, j] + tmp[half + i, j]) * INV_SQRT2
            a[2 * i + 1, j] = (tmp[i, j] - tmp[half + i, j]) * INV_SQRT2


def haar2_forward(x, int levels):
    out = np.array(x, dtype=np.complex128, order="C", copy=True)
    tmp = np.empty_like(out)
    cdef double complex[:, ::1] out_v = out
    cdef double complex[:, ::1] tmp_v = tmp
    cdef Py_ssize_t size = out_v.shape[0]
    cdef int k
    with nogil:
        for k in range(levels):
            _analyze(out_v, size, tmp_v)
            size //= 2
    return out


def haar2_inverse(w, int levels):
    out = np.array(w, dtype=np.complex128, order="C", copy=True)
    tmp = np.empty_like(out)
    cdef double complex[:, ::1] out_v = out
    cdef double complex[:, ::1] tmp_v = tmp
    cdef Py_ssize_t size = out_v.shape[0] >> (levels - 1)
    cdef int k
    with nogil:
        for k in range(levels):
            _synthesize(out_v, size, tmp_v)
            size *= 2
    return out


def soft_threshold(w, double lam):
    out = np.array(w, dtype=np.complex128, order="C", copy=True)
    cdef double complex[:, ::1] out_v = out
    cdef Py_ssize_t i, j
    cdef double mag, scale
    with nogil:
        for i in range(out_v.shape[0]):
            for j in range(out_v.shape[1]):
                mag = hypot(out_v[i, j].real, out_v[i, j].imag)
                if mag > lam:
                    scale = (mag - lam) / mag
                    out_v[i, j] = out_v[i, j] * scale
                else:
                    out_v[i, j] = 0
    return out
