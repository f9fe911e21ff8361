# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled pairwise-scan kernels.

Same contracts as ``roughpaths.kernels._ref``; see that module for the
definitions.  Plain typed loops, no parallelism: the scans are memory-light
and a single core saturates them at the grid sizes this library targets.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, pow, sqrt

cnp.import_array()

BACKEND = "c"


def pair_holder_max(const double[::1] times, const double[:, ::1] values, double alpha, double hmax=INFINITY):
    cdef Py_ssize_t n1 = times.shape[0]
    cdef Py_ssize_t m = values.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double best = 0.0, acc, dt, diff, ratio
    for i in range(n1 - 1):
        for j in range(i + 1, n1):
            dt = times[j] - times[i]
            if dt > hmax:
                break
            acc = 0.0
            for k in range(m):
                diff = values[j, k] - values[i, k]
                acc += diff * diff
            ratio = sqrt(acc)
            if alpha != 0.0:
                ratio /= pow(dt, alpha)
            if ratio > best:
                best = ratio
    return best


def level2_pair_max(const double[::1] times, const double[:, ::1] x, const double[:, :, ::1] xx0, double alpha2):
    cdef Py_ssize_t n1 = times.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t i, j, a, b
    cdef double best = 0.0, acc, dt, entry, ratio
    for i in range(n1 - 1):
        for j in range(i + 1, n1):
            dt = times[j] - times[i]
            acc = 0.0
            for a in range(d):
                for b in range(d):
                    entry = (
                        xx0[j, a, b]
                        - xx0[i, a, b]
                        - (x[i, a] - x[0, a]) * (x[j, b] - x[i, b])
                    )
                    acc += entry * entry
            ratio = sqrt(acc) / pow(dt, alpha2)
            if ratio > best:
                best = ratio
    return best


def level2_diff_pair_max(const double[::1] times, const double[:, ::1] x1, const double[:, :, ::1] xx01,
                         const double[:, ::1] x2, const double[:, :, ::1] xx02, double alpha2):
    cdef Py_ssize_t n1 = times.shape[0]
    cdef Py_ssize_t d = x1.shape[1]
    cdef Py_ssize_t i, j, a, b
    cdef double best = 0.0, acc, dt, e1, e2, ratio
    for i in range(n1 - 1):
        for j in range(i + 1, n1):
            dt = times[j] - times[i]
            acc = 0.0
            for a in range(d):
                for b in range(d):
                    e1 = (
                        xx01[j, a, b]
                        - xx01[i, a, b]
                        - (x1[i, a] - x1[0, a]) * (x1[j, b] - x1[i, b])
                    )
                    e2 = (
                        xx02[j, a, b]
                        - xx02[i, a, b]
                        - (x2[i, a] - x2[0, a]) * (x2[j, b] - x2[i, b])
                    )
                    acc += (e1 - e2) * (e1 - e2)
            ratio = sqrt(acc) / pow(dt, alpha2)
            if ratio > best:
                best = ratio
    return best


def remainder_pair_max(const double[::1] times, const double[:, ::1] y, const double[:, :, ::1] yp,
                       const double[:, ::1] x, double alpha2):
    cdef Py_ssize_t n1 = times.shape[0]
    cdef Py_ssize_t p = y.shape[1]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t i, j, k, a
    cdef double best = 0.0, acc, dt, rem, ratio
    for i in range(n1 - 1):
        for j in range(i + 1, n1):
            dt = times[j] - times[i]
            acc = 0.0
            for k in range(p):
                rem = y[j, k] - y[i, k]
                for a in range(d):
                    rem -= yp[i, k, a] * (x[j, a] - x[i, a])
                acc += rem * rem
            ratio = sqrt(acc) / pow(dt, alpha2)
            if ratio > best:
                best = ratio
    return best


cdef inline double _xx_entry(const double[:, ::1] x, const double[:, :, ::1] xx0,
                             Py_ssize_t i, Py_ssize_t j, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    return xx0[j, a, b] - xx0[i, a, b] - (x[i, a] - x[0, a]) * (x[j, b] - x[i, b])


def chen_defect_max_rp(const double[:, ::1] x, const double[:, :, ::1] xx0):
    cdef Py_ssize_t n1 = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t i, u, j, a, b
    cdef double best = 0.0, acc, defect
    with nogil:
        for i in range(n1):
            for u in range(i, n1):
                for j in range(u, n1):
                    acc = 0.0
                    for a in range(d):
                        for b in range(d):
                            defect = (
                                _xx_entry(x, xx0, i, j, a, b)
                                - _xx_entry(x, xx0, i, u, a, b)
                                - _xx_entry(x, xx0, u, j, a, b)
                                - (x[u, a] - x[i, a]) * (x[j, b] - x[u, b])
                            )
                            acc += defect * defect
                    if acc > best:
                        best = acc
    return sqrt(best)


def chen_defect_max_raw(const double[:, ::1] x, const double[:, :, :, ::1] field):
    cdef Py_ssize_t n1 = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t i, u, j, a, b
    cdef double best = 0.0, acc, defect
    with nogil:
        for i in range(n1):
            for u in range(i, n1):
                for j in range(u, n1):
                    acc = 0.0
                    for a in range(d):
                        for b in range(d):
                            defect = (
                                field[i, j, a, b]
                                - field[i, u, a, b]
                                - field[u, j, a, b]
                                - (x[u, a] - x[i, a]) * (x[j, b] - x[u, b])
                            )
                            acc += defect * defect
                    if acc > best:
                        best = acc
    return sqrt(best)
