# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Same signatures as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()


def quadform_gauss(w, X, double inv):
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = wv.shape[0], k = Xv.shape[1], i, j, c
    cdef double total = 0.0, row, r2, t
    with nogil:
        for i in range(n):
            if wv[i] == 0.0:
                continue
            row = 0.0
            for j in range(i + 1, n):
                r2 = 0.0
                for c in range(k):
                    t = Xv[i, c] - Xv[j, c]
                    r2 = r2 + t * t
                row = row + wv[j] * exp(-inv * r2)
            total = total + wv[i] * (wv[i] + 2.0 * row)
    return total


def quadform_gauss_1d(w, x, double inv):
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = wv.shape[0], i, j
    cdef double total = 0.0, row, t
    with nogil:
        for i in range(n):
            if wv[i] == 0.0:
                continue
            row = 0.0
            for j in range(i + 1, n):
                t = xv[i] - xv[j]
                row = row + wv[j] * exp(-inv * t * t)
            total = total + wv[i] * (wv[i] + 2.0 * row)
    return total


def poisson_binomial(p):
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef Py_ssize_t N = pv.shape[0], n, k
    out = np.zeros(N + 1, dtype=np.float64)
    cdef double[::1] pmf = out
    cdef double q, pk
    pmf[0] = 1.0
    with nogil:
        for n in range(1, N + 1):
            pk = pv[n - 1]
            q = 1.0 - pk
            for k in range(n, 0, -1):
                pmf[k] = pmf[k] * q + pmf[k - 1] * pk
            pmf[0] = pmf[0] * q
    return out


def sym_power_2(a, int N):
    cdef double complex[:, ::1] av = np.ascontiguousarray(a, dtype=np.complex128)
    cdef double complex a00 = av[0, 0], a01 = av[0, 1], a10 = av[1, 0], a11 = av[1, 1]
    # padded storage: entry (i, j) of the current matrix lives at [i + 1, j + 1]
    buf_a = np.zeros((N + 3, N + 3), dtype=np.complex128)
    buf_b = np.zeros((N + 3, N + 3), dtype=np.complex128)
    cdef double complex[:, ::1] old = buf_a
    cdef double complex[:, ::1] new = buf_b
    cdef double complex[:, ::1] tmp
    cdef double[::1] s0 = np.zeros(N + 1)
    cdef double[::1] s1 = np.zeros(N + 1)
    cdef Py_ssize_t n, i, j
    cdef double complex c00, c01, c10, c11
    old[1, 1] = 1.0
    for n in range(1, N + 1):
        with nogil:
            for i in range(n + 1):
                s0[i] = sqrt(<double>i / n)
                s1[i] = sqrt(<double>(n - i) / n)
            for i in range(n + 1):
                c00 = a00 * s0[i]
                c01 = a01 * s0[i]
                c10 = a10 * s1[i]
                c11 = a11 * s1[i]
                for j in range(n + 1):
                    new[i + 1, j + 1] = (s0[j] * (c00 * old[i, j] + c10 * old[i + 1, j])
                                         + s1[j] * (c01 * old[i, j + 1] + c11 * old[i + 1, j + 1]))
        tmp = old
        old = new
        new = tmp
    return np.asarray(old)[1:N + 2, 1:N + 2].copy()
