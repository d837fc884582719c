# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: effective-channel Monte Carlo scan and the
section-wise softmax.  Mirrors ``_kernels_py``; see there for semantics."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt

BACKEND = "cython"

cdef double _NOISELESS_INV_VAR = 1e8


def channel_scan(Z, sigmas):
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    sigmas = np.ascontiguousarray(sigmas, dtype=np.float64)
    cdef double[:, ::1] zv = Z
    cdef double[::1] sv = sigmas
    cdef Py_ssize_t n = zv.shape[0], B = zv.shape[1], ns = sv.shape[0]
    cdef Py_ssize_t npairs = n // 2

    t_mean = np.zeros(ns); t_err = np.zeros(ns)
    s_mean = np.zeros(ns); s_err = np.zeros(ns)
    e_mean = np.zeros(ns); e_err = np.zeros(ns)
    cdef double[::1] tm = t_mean, te = t_err, sm = s_mean, se = s_err, em = e_mean, ee = e_err

    cdef Py_ssize_t k, p, i, j
    cdef double sigma, inv2, m, D, g1, g2, b0, bj
    cdef double t0, s0, e0
    cdef double tp, sp, ep
    cdef double ts, tq, ss, sq, es, eq, mean, var

    for k in range(ns):
        sigma = sv[k]
        if sigma <= 0.0 or 1.0 / (sigma * sigma) > _NOISELESS_INV_VAR:
            continue
        inv2 = 1.0 / (sigma * sigma)
        ts = tq = ss = sq = es = eq = 0.0
        for p in range(npairs):
            tp = sp = ep = 0.0
            for i in range(2 * p, 2 * p + 2):
                b0 = zv[i, 0] / sigma + inv2
                m = b0
                for j in range(1, B):
                    bj = zv[i, j] / sigma
                    if bj > m:
                        m = bj
                D = exp(b0 - m)
                g2 = exp(zv[i, 1] / sigma - m)
                D += g2
                for j in range(2, B):
                    D += exp(zv[i, j] / sigma - m)
                g1 = exp(b0 - m) / D
                g2 = g2 / D
                t0 = (g1 - 1.0) * (g1 - 1.0) + (B - 1) * g2 * g2
                s0 = log(D) + m - b0
                e0 = 1.0 if m > b0 else 0.0
                tp += t0; sp += s0; ep += e0
            tp *= 0.5; sp *= 0.5; ep *= 0.5
            ts += tp; tq += tp * tp
            ss += sp; sq += sp * sp
            es += ep; eq += ep * ep
        mean = ts / npairs
        var = tq / npairs - mean * mean
        tm[k] = mean; te[k] = sqrt(var / npairs) if var > 0 else 0.0
        mean = ss / npairs
        var = sq / npairs - mean * mean
        sm[k] = mean; se[k] = sqrt(var / npairs) if var > 0 else 0.0
        mean = es / npairs
        var = eq / npairs - mean * mean
        em[k] = mean; ee[k] = sqrt(var / npairs) if var > 0 else 0.0
    return t_mean, t_err, s_mean, s_err, e_mean, e_err


def section_softmax(r, double temp, Py_ssize_t B):
    r = np.ascontiguousarray(r, dtype=np.float64)
    cdef double[::1] rv = r
    cdef Py_ssize_t N = rv.shape[0], L = N // B
    xhat = np.empty(N)
    cdef double[::1] xv = xhat
    cdef Py_ssize_t l, j, base
    cdef double m, D, g, dsum = 0.0
    for l in range(L):
        base = l * B
        m = rv[base]
        for j in range(1, B):
            if rv[base + j] > m:
                m = rv[base + j]
        D = 0.0
        for j in range(B):
            g = exp((rv[base + j] - m) / temp)
            xv[base + j] = g
            D += g
        for j in range(B):
            g = xv[base + j] / D
            xv[base + j] = g
            dsum += g * (1.0 - g)
    return xhat, dsum
