# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled row-wise kernels.

Drop-in replacements for hybridref.kernels.numpy_backend: same names, same
shapes, same math. Inputs are C-contiguous float64 arrays; rows are fused in
a single pass instead of numpy's one-temporary-per-step evaluation.
"""

import numpy as np

from libc.math cimport erf, exp, fabs, log, log1p, pow, sqrt

DEF INV_SQRT2 = 0.7071067811865476
DEF INV_SQRT_2PI = 0.3989422804014327


def softmax_fwd(double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i, j
    out_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double m, s
    for i in range(n):
        m = x[i, 0]
        for j in range(1, d):
            if x[i, j] > m:
                m = x[i, j]
        s = 0.0
        for j in range(d):
            out[i, j] = exp(x[i, j] - m)
            s += out[i, j]
        for j in range(d):
            out[i, j] /= s
    return out_arr


def softmax_bwd(double[:, ::1] y, double[:, ::1] gy):
    cdef Py_ssize_t n = y.shape[0], d = y.shape[1], i, j
    out_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double dot
    for i in range(n):
        dot = 0.0
        for j in range(d):
            dot += gy[i, j] * y[i, j]
        for j in range(d):
            out[i, j] = y[i, j] * (gy[i, j] - dot)
    return out_arr


def log_softmax_fwd(double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i, j
    out_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double m, s
    for i in range(n):
        m = x[i, 0]
        for j in range(1, d):
            if x[i, j] > m:
                m = x[i, j]
        s = 0.0
        for j in range(d):
            s += exp(x[i, j] - m)
        s = log(s)
        for j in range(d):
            out[i, j] = x[i, j] - m - s
    return out_arr


def log_softmax_bwd(double[:, ::1] logp, double[:, ::1] gy):
    cdef Py_ssize_t n = logp.shape[0], d = logp.shape[1], i, j
    out_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double s
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += gy[i, j]
        for j in range(d):
            out[i, j] = gy[i, j] - exp(logp[i, j]) * s
    return out_arr


def layernorm_fwd(double[:, ::1] x, double[::1] gain, double[::1] bias, double eps):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], i, j
    y_arr = np.empty((n, d), dtype=np.float64)
    xhat_arr = np.empty((n, d), dtype=np.float64)
    inv_std_arr = np.empty((n, 1), dtype=np.float64)
    cdef double[:, ::1] y = y_arr
    cdef double[:, ::1] xhat = xhat_arr
    cdef double[:, ::1] inv_std = inv_std_arr
    cdef double mu, var, dev, istd
    for i in range(n):
        mu = 0.0
        for j in range(d):
            mu += x[i, j]
        mu /= d
        var = 0.0
        for j in range(d):
            dev = x[i, j] - mu
            var += dev * dev
        var /= d
        istd = 1.0 / sqrt(var + eps)
        inv_std[i, 0] = istd
        for j in range(d):
            xhat[i, j] = (x[i, j] - mu) * istd
            y[i, j] = xhat[i, j] * gain[j] + bias[j]
    return y_arr, xhat_arr, inv_std_arr


def layernorm_bwd(double[:, ::1] gy, double[:, ::1] xhat, double[:, ::1] inv_std,
                  double[::1] gain):
    cdef Py_ssize_t n = gy.shape[0], d = gy.shape[1], i, j
    gx_arr = np.empty((n, d), dtype=np.float64)
    ggain_arr = np.zeros(d, dtype=np.float64)
    gbias_arr = np.zeros(d, dtype=np.float64)
    cdef double[:, ::1] gx = gx_arr
    cdef double[::1] ggain = ggain_arr
    cdef double[::1] gbias = gbias_arr
    cdef double m1, m2, dh
    for i in range(n):
        m1 = 0.0
        m2 = 0.0
        for j in range(d):
            dh = gy[i, j] * gain[j]
            m1 += dh
            m2 += dh * xhat[i, j]
        m1 /= d
        m2 /= d
        for j in range(d):
            gx[i, j] = inv_std[i, 0] * (gy[i, j] * gain[j] - m1 - xhat[i, j] * m2)
            ggain[j] += gy[i, j] * xhat[i, j]
            gbias[j] += gy[i, j]
    return gx_arr, ggain_arr, gbias_arr


def gelu_fwd(double[::1] x):
    cdef Py_ssize_t n = x.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = 0.5 * x[i] * (1.0 + erf(x[i] * INV_SQRT2))
    return out_arr


def gelu_bwd(double[::1] x, double[::1] gy):
    cdef Py_ssize_t n = x.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double cdf, pdf
    for i in range(n):
        cdf = 0.5 * (1.0 + erf(x[i] * INV_SQRT2))
        pdf = INV_SQRT_2PI * exp(-0.5 * x[i] * x[i])
        out[i] = gy[i] * (cdf + x[i] * pdf)
    return out_arr


def sigmoid_fwd(double[::1] x):
    cdef Py_ssize_t n = x.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double ex
    for i in range(n):
        if x[i] >= 0.0:
            out[i] = 1.0 / (1.0 + exp(-x[i]))
        else:
            ex = exp(x[i])
            out[i] = ex / (1.0 + ex)
    return out_arr


def sigmoid_bwd(double[::1] y, double[::1] gy):
    cdef Py_ssize_t n = y.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = gy[i] * y[i] * (1.0 - y[i])
    return out_arr


def softplus_fwd(double[::1] x):
    cdef Py_ssize_t n = x.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double m
    for i in range(n):
        m = x[i] if x[i] > 0.0 else 0.0
        out[i] = m + log1p(exp(-fabs(x[i])))
    return out_arr


def softplus_bwd(double[::1] x, double[::1] gy):
    cdef Py_ssize_t n = x.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double ex
    for i in range(n):
        if x[i] >= 0.0:
            out[i] = gy[i] / (1.0 + exp(-x[i]))
        else:
            ex = exp(x[i])
            out[i] = gy[i] * ex / (1.0 + ex)
    return out_arr


def adam_update(double[::1] p, double[::1] g, double[::1] m, double[::1] v,
                double lr, double beta1, double beta2, double eps, long step):
    cdef Py_ssize_t n = p.shape[0], i
    cdef double c1 = 1.0 - pow(beta1, <double> step)
    cdef double c2 = 1.0 - pow(beta2, <double> step)
    cdef double mhat, vhat
    for i in range(n):
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
        mhat = m[i] / c1
        vhat = v[i] / c2
        p[i] -= lr * mhat / (sqrt(vhat) + eps)
