# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. See ``_kernels_py`` for the reference semantics."""

import numpy as np

from libc.math cimport erfc, exp, log, sqrt, INFINITY
from libc.stdlib cimport free, malloc


def weighted_map_error(const double[:, ::1] q, double t, double eta):
    """Row-wise ``sum_l q[i, l] * miss_l`` for hypotheses ``N(l t, eta)``.

    ``miss_l`` is the probability that the MAP rule with weights ``q[i]``
    rejects hypothesis ``l`` when it is true.
    """
    cdef Py_ssize_t n = q.shape[0], m = q.shape[1], i, l, k
    cdef double *a = <double *> malloc(m * sizeof(double))
    cdef double tot, lo, hi, z, miss, s2 = sqrt(2.0 * eta)
    out = np.empty(n)
    cdef double[::1] res = out
    if a == NULL:
        raise MemoryError()
    try:
        for i in range(n):
            for l in range(m):
                if q[i, l] > 0:
                    a[l] = log(q[i, l]) - 0.5 * l * l * t * t / eta
                else:
                    a[l] = -INFINITY
            tot = 0.0
            for l in range(m):
                if q[i, l] <= 0:
                    continue
                lo = -INFINITY
                hi = INFINITY
                for k in range(m):
                    if k == l or q[i, k] <= 0:
                        continue
                    z = (a[k] - a[l]) * eta / ((l - k) * t)
                    if k < l:
                        if z > lo:
                            lo = z
                    elif z < hi:
                        hi = z
                if lo >= hi:
                    miss = 1.0
                else:
                    miss = 0.5 * erfc((l * t - lo) / s2) + 0.5 * erfc((hi - l * t) / s2)
                tot += q[i, l] * miss
            res[i] = tot
    finally:
        free(a)
    return out


def posterior_moments(const double[::1] y, const double[::1] x, const double[::1] logw,
                      const long[::1] lo_idx, const long[::1] hi_idx, double eta):
    """Log normaliser, mean and variance of ``w(x) phi_eta(y - x)`` per ``y``.

    Only nodes ``lo_idx[j] <= i < hi_idx[j]`` contribute for ``y[j]``.
    """
    cdef Py_ssize_t ny = y.shape[0], j, i
    cdef double mx, e, s0, s1, s2, d, c, mu
    logz = np.empty(ny)
    mean = np.empty(ny)
    var = np.empty(ny)
    cdef double[::1] lz = logz, mn = mean, vr = var
    for j in range(ny):
        mx = -INFINITY
        for i in range(lo_idx[j], hi_idx[j]):
            d = y[j] - x[i]
            e = logw[i] - 0.5 * d * d / eta
            if e > mx:
                mx = e
        s0 = 0.0
        s1 = 0.0
        c = 0.0
        if mx > -INFINITY:
            for i in range(lo_idx[j], hi_idx[j]):
                d = y[j] - x[i]
                e = exp(logw[i] - 0.5 * d * d / eta - mx)
                s0 += e
                s1 += e * x[i]
        if s0 <= 0:
            lz[j] = -INFINITY
            mn[j] = 0.0
            vr[j] = 0.0
            continue
        mu = s1 / s0
        s2 = 0.0
        for i in range(lo_idx[j], hi_idx[j]):
            d = y[j] - x[i]
            e = exp(logw[i] - 0.5 * d * d / eta - mx)
            c = x[i] - mu
            s2 += e * c * c
        lz[j] = mx + log(s0)
        mn[j] = mu
        vr[j] = s2 / s0
    return logz, mean, var
