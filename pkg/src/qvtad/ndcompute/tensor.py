"""Dense 2-D tensors with a reverse-mode tape.

Everything is float64 and strictly two-dimensional; there is no broadcasting
beyond row/column vectors where a primitive explicitly supports it. Each op
validates shapes, computes its forward value through the selected kernel
backend, and (when any input is tracked) records a backward closure on the
tape. `backward` walks the tape in reverse and accumulates gradients into the
`.grad` buffers of tensors created with requires_grad=True.
"""

import numpy as np

from ..errors import GradientError, NumericError, ShapeError
from .backend import K


class Tensor2:
    """A rows x cols float64 matrix, optionally carrying a gradient buffer."""

    __slots__ = ("data", "requires_grad", "grad", "_tracked")

    def __init__(self, data, requires_grad=False):
        arr = np.ascontiguousarray(data, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"Tensor2 requires a 2-D array, got ndim={arr.ndim}")
        if not np.isfinite(arr).all():
            raise NumericError("Tensor2 initialized with non-finite values")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._tracked = self.requires_grad

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    def item(self):
        if self.data.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.data.shape}")
        return float(self.data[0, 0])

    def zero_grad(self):
        self.grad = None

    def accumulate_grad(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def __repr__(self):
        return f"Tensor2(shape={self.data.shape}, requires_grad={self.requires_grad})"


class Tape:
    """Ordered record of primitive applications for one backward pass."""

    def __init__(self):
        self._nodes = []  # (out, inputs, backward_fn)
        self._outputs = set()

    def __len__(self):
        return len(self._nodes)

    def record(self, out, inputs, backward_fn):
        out._tracked = True
        self._nodes.append((out, inputs, backward_fn))
        self._outputs.add(id(out))

    def produced(self, t):
        return id(t) in self._outputs


def backward(tape, loss):
    """Accumulate d(loss)/d(leaf) into every requires_grad leaf on the tape.

    Repeated calls without zero_grad add up. Leaves that participated in the
    graph but received no adjoint (e.g. masked-out branches) get zero grads.
    """
    if loss.data.shape != (1, 1):
        raise GradientError(f"loss must be 1x1, got {loss.data.shape}")
    if not tape._nodes:
        raise GradientError("backward on an empty tape")
    if not tape.produced(loss):
        raise GradientError("loss tensor was not produced by this tape")

    adjoint = {id(loss): np.ones((1, 1))}
    leaves = {}
    for out, inputs, backward_fn in reversed(tape._nodes):
        g = adjoint.pop(id(out), None)
        if g is None:
            continue
        for tensor, contrib in backward_fn(g):
            if tensor.requires_grad and not tape.produced(tensor):
                leaves[id(tensor)] = tensor
            prev = adjoint.get(id(tensor))
            adjoint[id(tensor)] = contrib if prev is None else prev + contrib
        # leaf bookkeeping: inputs that never get a backward_fn contribution
        for tensor in inputs:
            if tensor.requires_grad and not tape.produced(tensor):
                leaves.setdefault(id(tensor), tensor)

    for tid, tensor in leaves.items():
        g = adjoint.get(tid)
        tensor.accumulate_grad(g if g is not None else np.zeros_like(tensor.data))


def _wrap(tape, out_data, inputs, backward_fn):
    if not np.isfinite(out_data).all():
        raise NumericError("primitive produced a non-finite value")
    out = Tensor2(out_data)
    if tape is not None and any(t._tracked for t in inputs):
        tape.record(out, inputs, backward_fn)
    return out


def matmul(tape, a, b):
    if a.cols != b.rows:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
    out_data = K.matmul(a.data, b.data)

    def bwd(g):
        ga, gb = K.matmul_bwd(a.data, b.data, g)
        return [(a, ga), (b, gb)]

    return _wrap(tape, out_data, (a, b), bwd)


def add(tape, a, b):
    if a.shape != b.shape:
        raise ShapeError(f"add: {a.shape} vs {b.shape}")
    return _wrap(tape, K.add(a.data, b.data), (a, b), lambda g: [(a, g), (b, g)])


def sub(tape, a, b):
    if a.shape != b.shape:
        raise ShapeError(f"sub: {a.shape} vs {b.shape}")
    return _wrap(tape, K.sub(a.data, b.data), (a, b), lambda g: [(a, g), (b, -g)])


def scale(tape, a, c):
    """Multiply by a python scalar or a 1x1 tensor (gradient flows to both)."""
    if isinstance(c, Tensor2):
        if c.shape != (1, 1):
            raise ShapeError(f"scale: scalar tensor must be 1x1, got {c.shape}")
        out_data = K.scale_const(a.data, c.data[0, 0])

        def bwd(g):
            return [(a, K.scale_const(g, c.data[0, 0])), (c, np.array([[np.sum(g * a.data)]]))]

        return _wrap(tape, out_data, (a, c), bwd)
    cval = float(c)
    return _wrap(tape, K.scale_const(a.data, cval), (a,), lambda g: [(a, K.scale_const(g, cval))])


def mul_colvec(tape, a, c):
    """Elementwise multiply each row of `a` by the matching entry of column vector `c`."""
    if c.shape != (a.rows, 1):
        raise ShapeError(f"mul_colvec: {a.shape} vs {c.shape}")
    out_data = K.mul_colvec(a.data, c.data)

    def bwd(g):
        ga, gc = K.mul_colvec_bwd(a.data, c.data, g)
        return [(a, ga), (c, gc)]

    return _wrap(tape, out_data, (a, c), bwd)


def rowsum_mul(tape, a, b):
    """Row-wise dot product of two equally shaped matrices -> (rows, 1)."""
    if a.shape != b.shape:
        raise ShapeError(f"rowsum_mul: {a.shape} vs {b.shape}")
    out_data = K.rowsum_mul(a.data, b.data)

    def bwd(g):
        ga, gb = K.rowsum_mul_bwd(a.data, b.data, g)
        return [(a, ga), (b, gb)]

    return _wrap(tape, out_data, (a, b), bwd)


def row_softmax(tape, a):
    if a.cols == 0:
        raise ShapeError("row_softmax over empty rows")
    s = K.row_softmax(a.data)
    return _wrap(tape, s, (a,), lambda g: [(a, K.row_softmax_bwd(s, g))])


def tanh(tape, a):
    y = K.tanh_fwd(a.data)
    return _wrap(tape, y, (a,), lambda g: [(a, K.tanh_bwd(y, g))])


def sigmoid(tape, a):
    y = K.sigmoid_fwd(a.data)
    return _wrap(tape, y, (a,), lambda g: [(a, K.sigmoid_bwd(y, g))])


def l2_norm(tape, a):
    """Row-wise Euclidean norm -> (rows, 1); for a 1xd vector this is its length."""
    norms = K.row_l2norm(a.data)

    def bwd(g):
        return [(a, K.row_l2norm_bwd(a.data, norms, g))]

    return _wrap(tape, norms, (a,), bwd)


def rms_norm(tape, a, eps=1e-6):
    """Row-wise RMS normalization, y = x / sqrt(mean(x^2) + eps)."""
    y, inv = K.rms_norm_fwd(a.data, eps)
    return _wrap(tape, y, (a,), lambda g: [(a, K.rms_norm_bwd(a.data, inv, g))])


def transpose(tape, a):
    return _wrap(tape, np.ascontiguousarray(a.data.T), (a,), lambda g: [(a, np.ascontiguousarray(g.T))])


def affine(tape, x, w, b):
    """x @ w + b with b a 1 x out row vector broadcast over rows."""
    if x.cols != w.rows:
        raise ShapeError(f"affine: {x.shape} @ {w.shape}")
    if b.shape != (1, w.cols):
        raise ShapeError(f"affine: bias {b.shape} does not match {w.shape}")
    out_data = K.affine(x.data, w.data, b.data)

    def bwd(g):
        gx, gw, gb = K.affine_bwd(x.data, w.data, g)
        return [(x, gx), (w, gw), (b, gb)]

    return _wrap(tape, out_data, (x, w, b), bwd)


def concat_rows(tape, tensors):
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat_rows of nothing")
    cols = tensors[0].cols
    if any(t.cols != cols for t in tensors):
        raise ShapeError("concat_rows: column counts differ")
    out_data = np.concatenate([t.data for t in tensors], axis=0)
    offsets = np.cumsum([0] + [t.rows for t in tensors])

    def bwd(g):
        return [(t, g[offsets[i]:offsets[i + 1], :]) for i, t in enumerate(tensors)]

    return _wrap(tape, out_data, tuple(tensors), bwd)


def concat_cols(tape, tensors):
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat_cols of nothing")
    rows = tensors[0].rows
    if any(t.rows != rows for t in tensors):
        raise ShapeError("concat_cols: row counts differ")
    out_data = np.concatenate([t.data for t in tensors], axis=1)
    offsets = np.cumsum([0] + [t.cols for t in tensors])

    def bwd(g):
        return [(t, np.ascontiguousarray(g[:, offsets[i]:offsets[i + 1]])) for i, t in enumerate(tensors)]

    return _wrap(tape, out_data, tuple(tensors), bwd)


def slice_cols(tape, a, start, stop):
    if not (0 <= start < stop <= a.cols):
        raise ShapeError(f"slice_cols: [{start}:{stop}] out of {a.cols}")
    out_data = np.ascontiguousarray(a.data[:, start:stop])

    def bwd(g):
        full = np.zeros_like(a.data)
        full[:, start:stop] = g
        return [(a, full)]

    return _wrap(tape, out_data, (a,), bwd)


def row(tape, a, i):
    if not (0 <= i < a.rows):
        raise ShapeError(f"row: index {i} out of {a.rows}")
    out_data = a.data[i:i + 1, :].copy()

    def bwd(g):
        full = np.zeros_like(a.data)
        full[i, :] = g[0, :]
        return [(a, full)]

    return _wrap(tape, out_data, (a,), bwd)


def take_per_row(tape, a, col_indices):
    """Pick one entry per row, out[i, 0] = a[i, col_indices[i]]."""
    idx = np.asarray(col_indices, dtype=np.intp)
    if idx.shape != (a.rows,):
        raise ShapeError(f"take_per_row: need {a.rows} indices, got {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= a.cols):
        raise ShapeError("take_per_row: column index out of range")
    rows_idx = np.arange(a.rows)
    out_data = a.data[rows_idx, idx].reshape(-1, 1)

    def bwd(g):
        full = np.zeros_like(a.data)
        full[rows_idx, idx] = g[:, 0]
        return [(a, full)]

    return _wrap(tape, out_data, (a,), bwd)


def bce(tape, p, y):
    """Mean binary cross-entropy of probabilities `p` against 0/1 targets `y`."""
    y_arr = np.asarray(y, dtype=np.float64).reshape(p.shape)
    loss, pc = K.bce_mean(p.data, y_arr)

    def bwd(g):
        return [(p, K.bce_mean_bwd(p.data, pc, y_arr, g[0, 0]))]

    return _wrap(tape, loss, (p,), bwd)


def dropout(tape, a, rate, seed, train_mode):
    """Inverted dropout; identity in eval mode, deterministic given seed."""
    if not (0.0 <= rate < 1.0):
        raise ShapeError(f"dropout rate must be in [0, 1), got {rate}")
    if not train_mode or rate == 0.0:
        return a
    rng = np.random.Generator(np.random.PCG64(seed))
    mask = (rng.random(a.shape) >= rate).astype(np.float64)
    keep_inv = 1.0 / (1.0 - rate)
    out_data = K.dropout_apply(a.data, mask, keep_inv)

    def bwd(g):
        return [(a, K.dropout_apply(g, mask, keep_inv))]

    return _wrap(tape, out_data, (a,), bwd)


class BatchNormState:
    """Per-feature scale/shift plus running statistics for batch_stat_norm."""

    def __init__(self, width, momentum=0.9, eps=1e-5):
        self.gamma = Tensor2(np.ones((1, width)), requires_grad=True)
        self.beta = Tensor2(np.zeros((1, width)), requires_grad=True)
        self.running_mean = np.zeros((1, width))
        self.running_var = np.ones((1, width))
        self.momentum = momentum
        self.eps = eps

    @property
    def width(self):
        return self.gamma.cols


def batch_stat_norm(tape, x, bn, train_mode):
    """Batch normalization over the row (batch) dimension.

    Train mode normalizes by batch statistics (and folds them into the running
    averages, unbiased variance); eval mode uses the running statistics.
    """
    if x.cols != bn.width:
        raise ShapeError(f"batch_stat_norm: {x.shape} vs width {bn.width}")
    if train_mode:
        if x.rows < 2:
            raise ShapeError("batch_stat_norm in train mode needs batch size >= 2")
        out_data, xhat, inv_std, mean, var = K.bn_train_fwd(x.data, bn.gamma.data, bn.beta.data, bn.eps)
        n = x.rows
        bn.running_mean = bn.momentum * bn.running_mean + (1.0 - bn.momentum) * mean
        bn.running_var = bn.momentum * bn.running_var + (1.0 - bn.momentum) * var * (n / (n - 1.0))

        def bwd(g):
            gx, ggamma, gbeta = K.bn_train_bwd(xhat, inv_std, bn.gamma.data, g)
            return [(x, gx), (bn.gamma, ggamma), (bn.beta, gbeta)]

    else:
        out_data, xhat, inv_std = K.bn_eval_fwd(
            x.data, bn.gamma.data, bn.beta.data, bn.running_mean, bn.running_var, bn.eps)

        def bwd(g):
            gx, ggamma, gbeta = K.bn_eval_bwd(xhat, inv_std, bn.gamma.data, g)
            return [(x, gx), (bn.gamma, ggamma), (bn.beta, gbeta)]

    return _wrap(tape, out_data, (x, bn.gamma, bn.beta), bwd)
