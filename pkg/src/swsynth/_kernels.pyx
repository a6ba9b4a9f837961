# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled 1-d transport kernels.

Same contract as ``_kernels_py``; sorting ties resolve to the smaller
original index (value/index pairs under lexicographic std::sort, which is
equivalent to a stable sort on the values).
"""

import numpy as np

cimport numpy as cnp
from libcpp.algorithm cimport sort as cpp_sort
from libcpp.pair cimport pair
from libcpp.vector cimport vector

cnp.import_array()

ctypedef pair[double, long] dl_pair


def w2sq_rows(const double[:, ::1] y, const double[:, ::1] y_target):
    cdef Py_ssize_t n_rows = y.shape[0], m = y.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals = np.empty(n_rows)
    cdef double[::1] vals_v = vals
    cdef vector[double] ys, ts
    cdef Py_ssize_t r, i
    cdef double acc, d
    ys.resize(m)
    ts.resize(m)
    for r in range(n_rows):
        for i in range(m):
            ys[i] = y[r, i]
            ts[i] = y_target[r, i]
        cpp_sort(ys.begin(), ys.end())
        cpp_sort(ts.begin(), ts.end())
        acc = 0.0
        for i in range(m):
            d = ys[i] - ts[i]
            acc += d * d
        vals_v[r] = acc / m
    return vals


def w2sq_grad_rows(const double[:, ::1] y, const double[:, ::1] y_target):
    cdef Py_ssize_t n_rows = y.shape[0], m = y.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals = np.empty(n_rows)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] grad = np.empty((n_rows, m))
    cdef double[::1] vals_v = vals
    cdef double[:, ::1] grad_v = grad
    cdef vector[dl_pair] ys
    cdef vector[double] ts
    cdef Py_ssize_t r, i
    cdef double acc, d, two_over_m = 2.0 / m
    ys.resize(m)
    ts.resize(m)
    for r in range(n_rows):
        for i in range(m):
            ys[i] = dl_pair(y[r, i], <long> i)
            ts[i] = y_target[r, i]
        cpp_sort(ys.begin(), ys.end())
        cpp_sort(ts.begin(), ts.end())
        acc = 0.0
        for i in range(m):
            d = ys[i].first - ts[i]
            acc += d * d
            grad_v[r, ys[i].second] = two_over_m * d
        vals_v[r] = acc / m
    return vals, grad


def w1_rows(const double[:, ::1] loc_a, const double[::1] w_a,
            const double[:, ::1] loc_b, const double[::1] w_b):
    cdef Py_ssize_t n_rows = loc_a.shape[0]
    cdef Py_ssize_t ka = loc_a.shape[1], kb = loc_b.shape[1]
    cdef Py_ssize_t n = ka + kb
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vals = np.empty(n_rows)
    cdef double[::1] vals_v = vals
    cdef vector[dl_pair] merged
    cdef Py_ssize_t r, i
    cdef double cdf, acc, w
    merged.resize(n)
    for r in range(n_rows):
        for i in range(ka):
            merged[i] = dl_pair(loc_a[r, i], <long> i)
        for i in range(kb):
            merged[ka + i] = dl_pair(loc_b[r, i], <long> (ka + i))
        cpp_sort(merged.begin(), merged.end())
        cdf = 0.0
        acc = 0.0
        for i in range(n - 1):
            w = w_a[merged[i].second] if merged[i].second < ka \
                else -w_b[merged[i].second - ka]
            cdf += w
            acc += (merged[i + 1].first - merged[i].first) * (cdf if cdf >= 0.0 else -cdf)
        vals_v[r] = acc
    return vals


def sw1_grid_value_grad(const double[::1] wdiff, const long[:, ::1] order,
                        const double[:, ::1] gaps):
    cdef Py_ssize_t n_rows = order.shape[0], k = order.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] grad = np.zeros(order.shape[1])
    cdef double[::1] grad_v = grad
    cdef vector[double] signed_gaps
    cdef Py_ssize_t r, i
    cdef double value = 0.0, cdf, g, suffix
    signed_gaps.resize(k - 1 if k > 0 else 0)
    for r in range(n_rows):
        cdf = 0.0
        for i in range(k - 1):
            cdf += wdiff[order[r, i]]
            g = gaps[r, i]
            if cdf > 0.0:
                value += cdf * g
                signed_gaps[i] = g
            elif cdf < 0.0:
                value -= cdf * g
                signed_gaps[i] = -g
            else:
                signed_gaps[i] = 0.0
        suffix = 0.0
        for i in range(k - 2, -1, -1):
            suffix += signed_gaps[i]
            grad_v[order[r, i]] += suffix
    for i in range(k):
        grad_v[i] /= n_rows
    return value / n_rows, grad
