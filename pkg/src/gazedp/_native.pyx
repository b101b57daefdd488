# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: separable PSF convolution and capped column sums.

Loops mirror the NumPy fallback tap-for-tap (ascending tap index, plain
multiply-add) so both backends return bit-identical arrays.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def conv_separable(const cnp.float64_t[:, ::1] values, const cnp.float64_t[::1] weights):
    cdef Py_ssize_t h = values.shape[0]
    cdef Py_ssize_t w = values.shape[1]
    cdef Py_ssize_t k = weights.shape[0]
    cdef Py_ssize_t radius = k // 2
    cdef cnp.ndarray[cnp.float64_t, ndim=2] tmp_arr = np.zeros((h, w))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.zeros((h, w))
    cdef cnp.float64_t[:, ::1] tmp = tmp_arr
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t y, x, j, src
    cdef double acc, prod

    for y in range(h):
        for x in range(w):
            acc = 0.0
            for j in range(k):
                src = x + j - radius
                if 0 <= src < w:
                    prod = weights[j] * values[y, src]
                    acc = acc + prod
            tmp[y, x] = acc

    for y in range(h):
        for x in range(w):
            acc = 0.0
            for j in range(k):
                src = y + j - radius
                if 0 <= src < h:
                    prod = weights[j] * tmp[src, x]
                    acc = acc + prod
            out[y, x] = acc

    return out_arr


def capped_column_sums(const cnp.int64_t[:, ::1] stack, cnp.int64_t m):
    cdef Py_ssize_t n = stack.shape[0]
    cdef Py_ssize_t r = stack.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_arr = np.zeros(r, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t i, p
    cdef cnp.int64_t v

    for i in range(n):
        for p in range(r):
            v = stack[i, p]
            if v > m:
                v = m
            out[p] += v
    return out_arr
