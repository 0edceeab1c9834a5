"""Reference numpy kernels for the dense primitives.

Every function here takes/returns float64 C-contiguous 2-D arrays and is pure
(no hidden state). The compiled extension `_kernels_cy` overrides the hot
subset of these with the same signatures; shape checking and tape recording
live one layer up in `tensor.py`, so kernels can assume valid inputs.
"""

import numpy as np

_BCE_CLIP = 1e-12


def matmul(a, b):
    return a @ b


def matmul_bwd(a, b, g):
    return g @ b.T, a.T @ g


def add(a, b):
    return a + b


def sub(a, b):
    return a - b


def scale_const(a, c):
    return a * c


def mul_colvec(a, c):
    # c is (rows, 1), broadcast across columns
    return a * c


def mul_colvec_bwd(a, c, g):
    return g * c, np.sum(g * a, axis=1, keepdims=True)


def rowsum_mul(a, b):
    # row-wise dot product -> (rows, 1)
    return np.sum(a * b, axis=1, keepdims=True)


def rowsum_mul_bwd(a, b, g):
    return g * b, g * a


def row_softmax(x):
    shifted = x - np.max(x, axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=1, keepdims=True)


def row_softmax_bwd(s, g):
    inner = np.sum(g * s, axis=1, keepdims=True)
    return s * (g - inner)


def tanh_fwd(x):
    return np.tanh(x)


def tanh_bwd(y, g):
    return g * (1.0 - y * y)


def sigmoid_fwd(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_bwd(y, g):
    return g * y * (1.0 - y)


def row_l2norm(x):
    return np.sqrt(np.sum(x * x, axis=1, keepdims=True))


def row_l2norm_bwd(x, norms, g):
    safe = np.where(norms > 0.0, norms, 1.0)
    return g * x / safe


def affine(x, w, b):
    return x @ w + b


def affine_bwd(x, w, g):
    return g @ w.T, x.T @ g, np.sum(g, axis=0, keepdims=True)


def bce_mean(p, y):
    """Mean binary cross-entropy of probabilities p against 0/1 targets y.

    Returns (loss 1x1, clipped p). Gradients are taken through the clipped
    probabilities, so saturated predictions get zero gradient instead of inf.
    """
    pc = np.clip(p, _BCE_CLIP, 1.0 - _BCE_CLIP)
    loss = -np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    return np.array([[loss]]), pc


def bce_mean_bwd(p, pc, y, g):
    n = pc.size
    gp = np.where(p == pc, (pc - y) / (pc * (1.0 - pc) * n), 0.0)
    return gp * g


def bn_train_fwd(x, gamma, beta, eps):
    mean = np.mean(x, axis=0, keepdims=True)
    var = np.var(x, axis=0, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean) * inv_std
    return xhat * gamma + beta, xhat, inv_std, mean, var


def bn_train_bwd(xhat, inv_std, gamma, g):
    n = g.shape[0]
    ggamma = np.sum(g * xhat, axis=0, keepdims=True)
    gbeta = np.sum(g, axis=0, keepdims=True)
    gx = (gamma * inv_std / n) * (n * g - gbeta - xhat * ggamma)
    return gx, ggamma, gbeta


def bn_eval_fwd(x, gamma, beta, running_mean, running_var, eps):
    inv_std = 1.0 / np.sqrt(running_var + eps)
    xhat = (x - running_mean) * inv_std
    return xhat * gamma + beta, xhat, inv_std


def bn_eval_bwd(xhat, inv_std, gamma, g):
    ggamma = np.sum(g * xhat, axis=0, keepdims=True)
    gbeta = np.sum(g, axis=0, keepdims=True)
    return g * gamma * inv_std, ggamma, gbeta


def dropout_apply(x, mask, keep_inv):
    return x * mask * keep_inv


def rms_norm_fwd(x, eps):
    inv = 1.0 / np.sqrt(np.mean(x * x, axis=1, keepdims=True) + eps)
    return x * inv, inv


def rms_norm_bwd(x, inv, g):
    n = x.shape[1]
    inner = np.sum(g * x, axis=1, keepdims=True)
    return g * inv - x * (inv ** 3) * (inner / n)


def adam_update(param, grad, m, v, lr, beta1, beta2, eps, t):
    """Standard bias-corrected Adam step, in place on param/m/v."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1 ** t)
    vhat = v / (1.0 - beta2 ** t)
    param -= lr * mhat / (np.sqrt(vhat) + eps)
