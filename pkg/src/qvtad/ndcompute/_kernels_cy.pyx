# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled overrides for the hot dense primitives.

Signatures mirror kernels_py exactly; anything not defined here (notably
matmul/affine, which delegate to BLAS through numpy either way) falls through
to the numpy implementations. All inputs are float64 C-contiguous arrays.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()

_BCE_CLIP = 1e-12


def add(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t r = a.shape[0], c = a.shape[1], i, j
    out = np.empty((r, c))
    cdef double[:, ::1] o = out
    for i in range(r):
        for j in range(c):
            o[i, j] = a[i, j] + b[i, j]
    return out


def sub(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t r = a.shape[0], c = a.shape[1], i, j
    out = np.empty((r, c))
    cdef double[:, ::1] o = out
    for i in range(r):
        for j in range(c):
            o[i, j] = a[i, j] - b[i, j]
    return out


def scale_const(double[:, ::1] a, double c):
    cdef Py_ssize_t rows = a.shape[0], cols = a.shape[1], i, j
    out = np.empty((rows, cols))
    cdef double[:, ::1] o = out
    for i in range(rows):
        for j in range(cols):
            o[i, j] = a[i, j] * c
    return out


def mul_colvec(double[:, ::1] a, double[:, ::1] c):
    cdef Py_ssize_t rows = a.shape[0], cols = a.shape[1], i, j
    out = np.empty((rows, cols))
    cdef double[:, ::1] o = out
    cdef double cv
    for i in range(rows):
        cv = c[i, 0]
        for j in range(cols):
            o[i, j] = a[i, j] * cv
    return out


def mul_colvec_bwd(double[:, ::1] a, double[:, ::1] c, double[:, ::1] g):
    cdef Py_ssize_t rows = a.shape[0], cols = a.shape[1], i, j
    ga = np.empty((rows, cols))
    gc = np.empty((rows, 1))
    cdef double[:, ::1] ga_v = ga, gc_v = gc
    cdef double cv, acc
    for i in range(rows):
        cv = c[i, 0]
        acc = 0.0
        for j in range(cols):
            ga_v[i, j] = g[i, j] * cv
            acc += g[i, j] * a[i, j]
        gc_v[i, 0] = acc
    return ga, gc


def rowsum_mul(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t rows = a.shape[0], cols = a.shape[1], i, j
    out = np.empty((rows, 1))
    cdef double[:, ::1] o = out
    cdef double acc
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += a[i, j] * b[i, j]
        o[i, 0] = acc
    return out


def rowsum_mul_bwd(double[:, ::1] a, double[:, ::1] b, double[:, ::1] g):
    cdef Py_ssize_t rows = a.shape[0], cols = a.shape[1], i, j
    ga = np.empty((rows, cols))
    gb = np.empty((rows, cols))
    cdef double[:, ::1] ga_v = ga, gb_v = gb
    cdef double gv
    for i in range(rows):
        gv = g[i, 0]
        for j in range(cols):
            ga_v[i, j] = gv * b[i, j]
            gb_v[i, j] = gv * a[i, j]
    return ga, gb


def row_softmax(double[:, ::1] x):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    out = np.empty((rows, cols))
    cdef double[:, ::1] o = out
    cdef double m, s
    for i in range(rows):
        m = x[i, 0]
        for j in range(1, cols):
            if x[i, j] > m:
                m = x[i, j]
        s = 0.0
        for j in range(cols):
            o[i, j] = exp(x[i, j] - m)
            s += o[i, j]
        for j in range(cols):
            o[i, j] /= s
    return out


def row_softmax_bwd(double[:, ::1] s, double[:, ::1] g):
    cdef Py_ssize_t rows = s.shape[0], cols = s.shape[1], i, j
    out = np.empty((rows, cols))
    cdef double[:, ::1] o = out
    cdef double inner
    for i in range(rows):
        inner = 0.0
        for j in range(cols):
            inner += g[i, j] * s[i, j]
        for j in range(cols):
            o[i, j] = s[i, j] * (g[i, j] - inner)
    return out


# tanh_fwd intentionally not overridden: numpy's SIMD tanh is ~10x faster
# than a scalar libm loop; the backward (pure arithmetic) does win here.


def tanh_bwd(double[:, ::1] y, double[:, ::1] g):
    cdef Py_ssize_t rows = y.shape[0], cols = y.shape[1], i, j
    out = np.empty((rows, cols))
    cdef double[:, ::1] o = out
    for i in range(rows):
        for j in range(cols):
            o[i, j] = g[i, j] * (1.0 - y[i, j] * y[i, j])
    return out


def sigmoid_fwd(double[:, ::1] x):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    out = np.empty((rows, cols))
    cdef double[:, ::1] o = out
    cdef double v, e
    for i in range(rows):
        for j in range(cols):
            v = x[i, j]
            if v >= 0.0:
                o[i, j] = 1.0 / (1.0 + exp(-v))
            else:
                e = exp(v)
                o[i, j] = e / (1.0 + e)
    return out


def sigmoid_bwd(double[:, ::1] y, double[:, ::1] g):
    cdef Py_ssize_t rows = y.shape[0], cols = y.shape[1], i, j
    out = np.empty((rows, cols))
    cdef double[:, ::1] o = out
    for i in range(rows):
        for j in range(cols):
            o[i, j] = g[i, j] * y[i, j] * (1.0 - y[i, j])
    return out


def row_l2norm(double[:, ::1] x):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    out = np.empty((rows, 1))
    cdef double[:, ::1] o = out
    cdef double acc
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += x[i, j] * x[i, j]
        o[i, 0] = sqrt(acc)
    return out


def row_l2norm_bwd(double[:, ::1] x, double[:, ::1] norms, double[:, ::1] g):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    out = np.empty((rows, cols))
    cdef double[:, ::1] o = out
    cdef double factor, n
    for i in range(rows):
        n = norms[i, 0]
        factor = g[i, 0] / n if n > 0.0 else 0.0
        for j in range(cols):
            o[i, j] = factor * x[i, j]
    return out


def rms_norm_fwd(double[:, ::1] x, double eps):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    out = np.empty((rows, cols))
    inv = np.empty((rows, 1))
    cdef double[:, ::1] o = out, inv_v = inv
    cdef double acc
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += x[i, j] * x[i, j]
        inv_v[i, 0] = 1.0 / sqrt(acc / cols + eps)
        for j in range(cols):
            o[i, j] = x[i, j] * inv_v[i, 0]
    return out, inv


def rms_norm_bwd(double[:, ::1] x, double[:, ::1] inv, double[:, ::1] g):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    out = np.empty((rows, cols))
    cdef double[:, ::1] o = out
    cdef double inner, iv, iv3
    for i in range(rows):
        inner = 0.0
        for j in range(cols):
            inner += g[i, j] * x[i, j]
        iv = inv[i, 0]
        iv3 = iv * iv * iv
        inner /= cols
        for j in range(cols):
            o[i, j] = g[i, j] * iv - x[i, j] * iv3 * inner
    return out


def bce_mean(double[:, ::1] p, double[:, ::1] y):
    cdef Py_ssize_t rows = p.shape[0], i
    cdef double lo = _BCE_CLIP, hi = 1.0 - _BCE_CLIP
    pc = np.empty((rows, 1))
    cdef double[:, ::1] pc_v = pc
    cdef double acc = 0.0, v
    for i in range(rows):
        v = p[i, 0]
        if v < lo:
            v = lo
        elif v > hi:
            v = hi
        pc_v[i, 0] = v
        acc += y[i, 0] * log(v) + (1.0 - y[i, 0]) * log(1.0 - v)
    return np.array([[-acc / rows]]), pc


def bce_mean_bwd(double[:, ::1] p, double[:, ::1] pc, double[:, ::1] y, double g):
    cdef Py_ssize_t rows = p.shape[0], i
    out = np.empty((rows, 1))
    cdef double[:, ::1] o = out
    cdef double v
    for i in range(rows):
        v = pc[i, 0]
        if p[i, 0] == v:
            o[i, 0] = g * (v - y[i, 0]) / (v * (1.0 - v) * rows)
        else:
            o[i, 0] = 0.0
    return out


def bn_train_fwd(double[:, ::1] x, double[:, ::1] gamma, double[:, ::1] beta, double eps):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    out = np.empty((rows, cols))
    xhat = np.empty((rows, cols))
    inv_std = np.empty((1, cols))
    mean = np.empty((1, cols))
    var = np.empty((1, cols))
    cdef double[:, ::1] o = out, xh = xhat, is_v = inv_std, mu = mean, va = var
    cdef double acc, dv
    for j in range(cols):
        acc = 0.0
        for i in range(rows):
            acc += x[i, j]
        mu[0, j] = acc / rows
        acc = 0.0
        for i in range(rows):
            dv = x[i, j] - mu[0, j]
            acc += dv * dv
        va[0, j] = acc / rows
        is_v[0, j] = 1.0 / sqrt(va[0, j] + eps)
        for i in range(rows):
            xh[i, j] = (x[i, j] - mu[0, j]) * is_v[0, j]
            o[i, j] = xh[i, j] * gamma[0, j] + beta[0, j]
    return out, xhat, inv_std, mean, var


def bn_train_bwd(double[:, ::1] xhat, double[:, ::1] inv_std, double[:, ::1] gamma,
                 double[:, ::1] g):
    cdef Py_ssize_t rows = g.shape[0], cols = g.shape[1], i, j
    gx = np.empty((rows, cols))
    ggamma = np.empty((1, cols))
    gbeta = np.empty((1, cols))
    cdef double[:, ::1] gx_v = gx, gg = ggamma, gb = gbeta
    cdef double sg, sgx, factor
    for j in range(cols):
        sg = 0.0
        sgx = 0.0
        for i in range(rows):
            sg += g[i, j]
            sgx += g[i, j] * xhat[i, j]
        gg[0, j] = sgx
        gb[0, j] = sg
        factor = gamma[0, j] * inv_std[0, j] / rows
        for i in range(rows):
            gx_v[i, j] = factor * (rows * g[i, j] - sg - xhat[i, j] * sgx)
    return gx, ggamma, gbeta


def bn_eval_fwd(double[:, ::1] x, double[:, ::1] gamma, double[:, ::1] beta,
                double[:, ::1] running_mean, double[:, ::1] running_var, double eps):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    out = np.empty((rows, cols))
    xhat = np.empty((rows, cols))
    inv_std = np.empty((1, cols))
    cdef double[:, ::1] o = out, xh = xhat, is_v = inv_std
    for j in range(cols):
        is_v[0, j] = 1.0 / sqrt(running_var[0, j] + eps)
        for i in range(rows):
            xh[i, j] = (x[i, j] - running_mean[0, j]) * is_v[0, j]
            o[i, j] = xh[i, j] * gamma[0, j] + beta[0, j]
    return out, xhat, inv_std


def bn_eval_bwd(double[:, ::1] xhat, double[:, ::1] inv_std, double[:, ::1] gamma,
                double[:, ::1] g):
    cdef Py_ssize_t rows = g.shape[0], cols = g.shape[1], i, j
    gx = np.empty((rows, cols))
    ggamma = np.empty((1, cols))
    gbeta = np.empty((1, cols))
    cdef double[:, ::1] gx_v = gx, gg = ggamma, gb = gbeta
    cdef double sg, sgx
    for j in range(cols):
        sg = 0.0
        sgx = 0.0
        for i in range(rows):
            sg += g[i, j]
            sgx += g[i, j] * xhat[i, j]
            gx_v[i, j] = g[i, j] * gamma[0, j] * inv_std[0, j]
        gg[0, j] = sgx
        gb[0, j] = sg
    return gx, ggamma, gbeta


def dropout_apply(double[:, ::1] x, double[:, ::1] mask, double keep_inv):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    out = np.empty((rows, cols))
    cdef double[:, ::1] o = out
    for i in range(rows):
        for j in range(cols):
            o[i, j] = x[i, j] * mask[i, j] * keep_inv
    return out


def adam_update(double[:, ::1] param, double[:, ::1] grad, double[:, ::1] m,
                double[:, ::1] v, double lr, double beta1, double beta2,
                double eps, long t):
    cdef Py_ssize_t rows = param.shape[0], cols = param.shape[1], i, j
    cdef double bc1 = 1.0 - beta1 ** t
    cdef double bc2 = 1.0 - beta2 ** t
    cdef double mhat, vhat
    for i in range(rows):
        for j in range(cols):
            m[i, j] = beta1 * m[i, j] + (1.0 - beta1) * grad[i, j]
            v[i, j] = beta2 * v[i, j] + (1.0 - beta2) * grad[i, j] * grad[i, j]
            mhat = m[i, j] / bc1
            vhat = v[i, j] / bc2
            param[i, j] -= lr * mhat / (sqrt(vhat) + eps)
