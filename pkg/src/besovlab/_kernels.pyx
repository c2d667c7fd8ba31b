# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops: log-space panel sums and the Kaluza recursion."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, fma

cnp.import_array()


def panel_sums(double[:, :, ::1] logvals, double[::1] weights, double[::1] shift):
    cdef Py_ssize_t K = logvals.shape[0]
    cdef Py_ssize_t P = logvals.shape[1]
    cdef Py_ssize_t q = logvals.shape[2]
    cdef Py_ssize_t k, p, j
    cdef double acc, s
    out = np.empty((K, P), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for k in range(K):
            s = shift[k]
            for p in range(P):
                acc = 0.0
                for j in range(q):
                    acc += weights[j] * exp(logvals[k, p, j] - s)
                o[k, p] = acc
    return out


cdef inline void two_sum(double a, double b, double *s, double *e) nogil:
    cdef double z
    s[0] = a + b
    z = s[0] - a
    e[0] = (a - (s[0] - z)) + (b - z)


def kaluza_recursion(F, bint compensated=False):
    cdef double[::1] f = np.ascontiguousarray(F, dtype=np.float64)
    cdef Py_ssize_t N = f.shape[0] - 1
    c_arr = np.zeros(N + 1, dtype=np.float64)
    mag_arr = np.zeros(N + 1, dtype=np.float64)
    cdef double[::1] c = c_arr
    cdef double[::1] mag = mag_arr
    cdef Py_ssize_t n, k
    cdef double acc, m, p, pe, s, se, comp
    with nogil:
        for n in range(1, N + 1):
            acc = f[n]
            m = fabs(f[n])
            comp = 0.0
            for k in range(1, n):
                p = -c[k] * f[n - k]
                m += fabs(p)
                if compensated:
                    # Dot2: exact product error via fma, running TwoSum
                    pe = fma(-c[k], f[n - k], -p)
                    two_sum(acc, p, &s, &se)
                    acc = s
                    comp += se + pe
                else:
                    acc += p
            c[n] = acc + comp
            mag[n] = m
    return c_arr, mag_arr
