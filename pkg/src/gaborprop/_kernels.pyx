# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled reductions over phase-space lattices.

Both routines mirror :mod:`gaborprop._kernels_py` exactly; the pure-numpy
module is the reference and the fallback when this extension is absent.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, floor, log2, pow, sqrt, M_PI, INFINITY

cnp.import_array()


def cone_shell_reduce(
    const double[::1] x_points,
    const double[::1] xi_points,
    const double[:, ::1] mag,
    int n_bins,
    double inner_radius,
    double outer_radius,
    int m_lo,
    int n_shells,
    double p,
    double r,
    double cell,
):
    cdef Py_ssize_t nx = x_points.shape[0]
    cdef Py_ssize_t nxi = xi_points.shape[0]
    cdef Py_ssize_t i, j
    cdef int b, m
    cdef double x, xi, rad, theta, v, w
    cdef double width = 2.0 * M_PI / n_bins
    cdef bint finite_p = p != INFINITY

    maxima_np = np.zeros((n_bins, n_shells), dtype=np.float64)
    sums_np = np.zeros((n_bins, n_shells), dtype=np.float64)
    counts_np = np.zeros((n_bins, n_shells), dtype=np.int64)
    cdef double[:, ::1] maxima = maxima_np
    cdef double[:, ::1] sums = sums_np
    cdef long long[:, ::1] counts = counts_np

    for i in range(nx):
        x = x_points[i]
        for j in range(nxi):
            xi = xi_points[j]
            rad = sqrt(x * x + xi * xi)
            if rad < inner_radius or rad >= outer_radius:
                continue
            m = <int>floor(log2(rad)) - m_lo
            if m < 0 or m >= n_shells:
                continue
            theta = atan2(xi, x)
            if theta < 0:
                theta += 2.0 * M_PI
            b = <int>floor((theta + 0.5 * width) / width)
            if b >= n_bins:
                b -= n_bins
            v = mag[i, j]
            if v > maxima[b, m]:
                maxima[b, m] = v
            counts[b, m] += 1
            if finite_p:
                w = pow(1.0 + rad * rad, 0.5 * p * r)
                sums[b, m] += pow(v, p) * w * cell
    return maxima_np, sums_np, counts_np


def binned_max_sum(const long long[::1] labels, const double[::1] values, Py_ssize_t n_labels):
    cdef Py_ssize_t n = labels.shape[0]
    cdef Py_ssize_t k
    cdef long long lab
    cdef double v

    maxima_np = np.zeros(n_labels, dtype=np.float64)
    sums_np = np.zeros(n_labels, dtype=np.float64)
    counts_np = np.zeros(n_labels, dtype=np.int64)
    cdef double[::1] maxima = maxima_np
    cdef double[::1] sums = sums_np
    cdef long long[::1] counts = counts_np

    for k in range(n):
        lab = labels[k]
        if lab < 0 or lab >= n_labels:
            continue
        v = values[k]
        if v > maxima[lab]:
            maxima[lab] = v
        sums[lab] += v
        counts[lab] += 1
    return maxima_np, sums_np, counts_np
