"""Primitive forward values, backward rules, and backend parity."""

import math

import numpy as np
import pytest

from qvtad import ndcompute as nd
from qvtad.errors import GradientError, NumericError, ShapeError
from qvtad.ndcompute import kernels_py
from qvtad.ndcompute.tensor import Tape, backward

try:
    from qvtad.ndcompute import _kernels_cy
except ImportError:
    _kernels_cy = None


def t(arr, grad=False):
    return nd.Tensor2(np.asarray(arr, dtype=np.float64), requires_grad=grad)


class TestForwardValues:
    def test_row_softmax_zero_logits(self):
        out = nd.row_softmax(None, t([[0.0, 0.0]]))
        np.testing.assert_allclose(out.data, [[0.5, 0.5]])

    def test_row_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        x = t(rng.normal(scale=5.0, size=(20, 7)))
        s = nd.row_softmax(None, x)
        np.testing.assert_allclose(s.data.sum(axis=1), np.ones(20), atol=1e-12)
        assert (s.data > 0).all()

    def test_sigmoid_at_zero(self):
        assert nd.sigmoid(None, t([[0.0]])).item() == 0.5

    def test_sigmoid_derivative_at_zero(self):
        x = t([[0.0]], grad=True)
        tape = Tape()
        y = nd.sigmoid(tape, x)
        backward(tape, y)
        assert abs(x.grad[0, 0] - 0.25) < 1e-15

    def test_l2_norm_three_four_five(self):
        assert nd.l2_norm(None, t([[3.0, 4.0]])).item() == 5.0

    def test_matmul_associativity(self):
        rng = np.random.default_rng(1)
        a, b, c = (t(rng.normal(size=(4, 5))), t(rng.normal(size=(5, 6))),
                   t(rng.normal(size=(6, 3))))
        left = nd.matmul(None, nd.matmul(None, a, b), c).data
        right = nd.matmul(None, a, nd.matmul(None, b, c)).data
        np.testing.assert_allclose(left, right, atol=1e-10)

    def test_bce_known_value(self):
        loss = nd.bce(None, t([[0.5]]), np.array([[1.0]]))
        assert abs(loss.item() - math.log(2.0)) < 1e-12

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            nd.add(None, t([[1.0]]), t([[1.0, 2.0]]))
        with pytest.raises(ShapeError):
            nd.matmul(None, t([[1.0, 2.0]]), t([[1.0, 2.0]]))

    def test_non_finite_rejected(self):
        with pytest.raises(NumericError):
            nd.Tensor2(np.array([[np.inf]]))


class TestDropout:
    def test_eval_mode_is_identity(self):
        x = t([[1.0, 2.0, 3.0]])
        assert nd.dropout(None, x, 0.5, seed=1, train_mode=False) is x

    def test_train_mode_deterministic_and_scaled(self):
        x = t(np.ones((50, 40)))
        a = nd.dropout(None, x, 0.25, seed=9, train_mode=True)
        b = nd.dropout(None, x, 0.25, seed=9, train_mode=True)
        np.testing.assert_array_equal(a.data, b.data)
        kept = a.data[a.data != 0]
        np.testing.assert_allclose(kept, 1.0 / 0.75)
        assert abs((a.data != 0).mean() - 0.75) < 0.05

    def test_different_seeds_differ(self):
        x = t(np.ones((20, 20)))
        a = nd.dropout(None, x, 0.5, seed=1, train_mode=True)
        b = nd.dropout(None, x, 0.5, seed=2, train_mode=True)
        assert not np.array_equal(a.data, b.data)


class TestBatchNorm:
    def test_train_then_eval_running_stats(self):
        bn = nd.BatchNormState(3)
        rng = np.random.default_rng(3)
        x = t(rng.normal(loc=2.0, scale=3.0, size=(64, 3)))
        out = nd.batch_stat_norm(None, x, bn, train_mode=True)
        np.testing.assert_allclose(out.data.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.data.std(axis=0), 1.0, atol=1e-3)
        mean = x.data.mean(axis=0, keepdims=True)
        var = x.data.var(axis=0, keepdims=True) * 64 / 63
        np.testing.assert_allclose(bn.running_mean, 0.1 * mean, atol=1e-12)
        np.testing.assert_allclose(bn.running_var, 0.9 + 0.1 * var, atol=1e-12)

    def test_train_mode_needs_two_rows(self):
        bn = nd.BatchNormState(2)
        with pytest.raises(ShapeError):
            nd.batch_stat_norm(None, t([[1.0, 2.0]]), bn, train_mode=True)


class TestBackward:
    def test_sum_gradient_is_ones(self):
        w = t(np.arange(6.0).reshape(2, 3), grad=True)
        ones = t(np.ones((3, 1)))
        tape = Tape()
        total = nd.matmul(tape, nd.matmul(tape, t(np.ones((1, 2))), w), ones)
        backward(tape, total)
        np.testing.assert_array_equal(w.grad, np.ones((2, 3)))

    def test_bce_sigmoid_gradient_analytic(self):
        # d/dz of bce(sigmoid(z), y=1) is sigmoid(z) - 1 = -0.5 at z = 0
        z = t([[0.0]], grad=True)
        tape = Tape()
        loss = nd.bce(tape, nd.sigmoid(tape, z), np.array([[1.0]]))
        backward(tape, loss)
        assert abs(z.grad[0, 0] + 0.5) < 1e-12

    def test_repeated_backward_accumulates(self):
        w = t([[2.0]], grad=True)
        for expected in (2.0, 4.0):
            tape = Tape()
            loss = nd.matmul(tape, w, w)
            backward(tape, loss)
            assert abs(w.grad[0, 0] - expected * 2.0) < 1e-12  # d(w^2)/dw = 2w

    def test_loss_must_be_scalar(self):
        w = t([[1.0, 2.0]], grad=True)
        tape = Tape()
        out = nd.tanh(tape, w)
        with pytest.raises(GradientError):
            backward(tape, out)

    def test_untaped_loss_rejected(self):
        w = t([[1.0]], grad=True)
        tape = Tape()
        nd.tanh(tape, w)
        with pytest.raises(GradientError):
            backward(tape, t([[1.0]]))

    def test_empty_tape_rejected(self):
        with pytest.raises(GradientError):
            backward(Tape(), t([[1.0]]))


def _quadratic(x):
    def f(tape):
        return nd.matmul(tape, x, nd.transpose(tape, x))
    return f


class TestGradCheck:
    def test_quadratic_form_near_exact(self):
        x = t(np.array([[1.0, -2.0, 0.5]]), grad=True)
        assert nd.grad_check(_quadratic(x), [x]) < 1e-8

    def test_every_primitive(self):
        rng = np.random.default_rng(7)
        a = t(rng.normal(size=(3, 4)), grad=True)
        b = t(rng.normal(size=(3, 4)), grad=True)
        w = t(rng.normal(size=(4, 2)), grad=True)
        bias = t(rng.normal(size=(1, 2)), grad=True)
        col = t(rng.normal(size=(3, 1)), grad=True)
        scalar = t([[0.7]], grad=True)
        y = np.array([[1.0], [0.0], [1.0]])
        bn = nd.BatchNormState(4)
        reducer = t(rng.normal(size=(4, 1)))
        reducers = {}

        def to_scalar(tape, m):
            # well-conditioned linear reduction to 1x1, then a bounded loss
            key = m.shape
            if key not in reducers:
                red_rng = np.random.default_rng(hash(key) % (2 ** 32))
                reducers[key] = (t(red_rng.normal(size=(1, m.rows)) * 0.5),
                                 t(red_rng.normal(size=(m.cols, 1)) * 0.5))
            left, right = reducers[key]
            z = nd.matmul(tape, nd.matmul(tape, left, m), right)
            return nd.bce(tape, nd.sigmoid(tape, z), np.array([[1.0]]))

        cases = {
            "matmul": (lambda tape: to_scalar(tape, nd.matmul(tape, a, w)), [a, w]),
            "add": (lambda tape: to_scalar(tape, nd.add(tape, a, b)), [a, b]),
            "sub": (lambda tape: to_scalar(tape, nd.sub(tape, a, b)), [a, b]),
            "scale_tensor": (lambda tape: to_scalar(tape, nd.scale(tape, a, scalar)), [a, scalar]),
            "scale_const": (lambda tape: to_scalar(tape, nd.scale(tape, a, -1.7)), [a]),
            "mul_colvec": (lambda tape: to_scalar(tape, nd.mul_colvec(tape, a, col)), [a, col]),
            "rowsum_mul": (lambda tape: to_scalar(tape, nd.rowsum_mul(tape, a, b)), [a, b]),
            "row_softmax": (lambda tape: to_scalar(tape, nd.row_softmax(tape, a)), [a]),
            "tanh": (lambda tape: to_scalar(tape, nd.tanh(tape, a)), [a]),
            "sigmoid": (lambda tape: to_scalar(tape, nd.sigmoid(tape, a)), [a]),
            "l2_norm": (lambda tape: to_scalar(tape, nd.l2_norm(tape, a)), [a]),
            "rms_norm": (lambda tape: to_scalar(tape, nd.rms_norm(tape, a)), [a]),
            "transpose": (lambda tape: to_scalar(tape, nd.transpose(tape, nd.tanh(tape, a))), [a]),
            "affine": (lambda tape: to_scalar(tape, nd.affine(tape, a, w, bias)), [a, w, bias]),
            "concat_rows": (lambda tape: to_scalar(tape, nd.concat_rows(tape, [a, b])), [a, b]),
            "concat_cols": (lambda tape: to_scalar(tape, nd.concat_cols(tape, [a, b])), [a, b]),
            "slice_cols": (lambda tape: to_scalar(tape, nd.slice_cols(tape, a, 1, 3)), [a]),
            "row": (lambda tape: to_scalar(tape, nd.row(tape, a, 1)), [a]),
            "take_per_row": (lambda tape: to_scalar(
                tape, nd.take_per_row(tape, a, [0, 3, 2])), [a]),
            "bce": (lambda tape: nd.bce(
                tape, nd.sigmoid(tape, nd.matmul(tape, a, reducer)), y), [a]),
            "dropout": (lambda tape: to_scalar(
                tape, nd.dropout(tape, a, 0.3, seed=5, train_mode=True)), [a]),
            "batch_stat_norm_train": (lambda tape: to_scalar(
                tape, nd.batch_stat_norm(tape, a, bn, True)), [a, bn.gamma, bn.beta]),
            "batch_stat_norm_eval": (lambda tape: to_scalar(
                tape, nd.batch_stat_norm(tape, a, bn, False)), [a, bn.gamma, bn.beta]),
        }
        for name, (f, inputs) in cases.items():
            err = nd.grad_check(f, inputs)
            assert err < 1e-5, f"{name}: grad_check error {err:.3e}"

    def test_wrong_backward_rule_detected(self):
        rng = np.random.default_rng(8)
        a = t(rng.normal(size=(2, 3)), grad=True)

        left = t(np.full((1, 2), 0.5))
        right = t(np.full((3, 1), 0.5))

        def f(tape):
            h = nd.tanh(tape, a)
            z = nd.matmul(tape, nd.matmul(tape, left, h), right)
            return nd.bce(tape, nd.sigmoid(tape, z), np.array([[1.0]]))

        original = nd.K.tanh_bwd
        nd.K.tanh_bwd = lambda y, g: g * (1.0 - 0.8 * y * y)
        try:
            err = nd.grad_check(f, [a])
        finally:
            nd.K.tanh_bwd = original
        assert err > 1e-2

    def test_nondeterministic_function_rejected(self):
        state = {"count": 0}
        x = t([[1.0]], grad=True)

        def f(tape):
            state["count"] += 1
            return nd.scale(tape, x, float(state["count"]))

        with pytest.raises(GradientError):
            nd.grad_check(f, [x])


@pytest.mark.skipif(_kernels_cy is None, reason="compiled kernels not built")
class TestBackendParity:
    def test_all_overridden_kernels_match(self):
        rng = np.random.default_rng(11)
        b, w = 33, 17
        x = np.ascontiguousarray(rng.normal(size=(b, w)))
        y = np.ascontiguousarray(rng.normal(size=(b, w)))
        col = np.ascontiguousarray(rng.normal(size=(b, 1)))
        g1 = np.ascontiguousarray(rng.normal(size=(b, 1)))
        gamma = np.ascontiguousarray(rng.normal(size=(1, w)))
        beta = np.ascontiguousarray(rng.normal(size=(1, w)))
        rm = np.ascontiguousarray(rng.normal(size=(1, w)))
        rv = np.ascontiguousarray(rng.uniform(0.5, 2.0, size=(1, w)))
        prob = np.ascontiguousarray(rng.uniform(0.0, 1.0, size=(b, 1)))
        labels = np.ascontiguousarray(rng.integers(0, 2, size=(b, 1)).astype(float))
        mask = np.ascontiguousarray((rng.random((b, w)) > 0.3).astype(float))
        soft = kernels_py.row_softmax(x)
        tanh_y = np.tanh(x)
        sig_y = kernels_py.sigmoid_fwd(x)
        norms = kernels_py.row_l2norm(x)
        _, inv = kernels_py.rms_norm_fwd(x, 1e-6)
        _, pc = kernels_py.bce_mean(prob, labels)

        calls = {
            "add": (x, y), "sub": (x, y), "scale_const": (x, 1.37),
            "mul_colvec": (x, col), "mul_colvec_bwd": (x, col, y),
            "rowsum_mul": (x, y), "rowsum_mul_bwd": (x, y, g1),
            "row_softmax": (x,), "row_softmax_bwd": (soft, y),
            "tanh_bwd": (tanh_y, y), "sigmoid_fwd": (x,), "sigmoid_bwd": (sig_y, y),
            "row_l2norm": (x,), "row_l2norm_bwd": (x, norms, g1),
            "rms_norm_fwd": (x, 1e-6), "rms_norm_bwd": (x, inv, y),
            "bce_mean": (prob, labels), "bce_mean_bwd": (prob, pc, labels, 0.7),
            "bn_train_fwd": (x, gamma, beta, 1e-5),
            "bn_eval_fwd": (x, gamma, beta, rm, rv, 1e-5),
            "dropout_apply": (x, mask, 1.0 / 0.7),
        }
        override_names = [n for n in dir(_kernels_cy)
                          if not n.startswith("_") and callable(getattr(_kernels_cy, n))]
        exercised = set(calls) | {"bn_train_bwd", "bn_eval_bwd", "adam_update"}
        assert set(override_names) <= exercised, (
            f"parity test missing kernels: {set(override_names) - exercised}")

        for name, args in calls.items():
            ref = getattr(kernels_py, name)(*args)
            got = getattr(_kernels_cy, name)(*args)
            if not isinstance(ref, tuple):
                ref, got = (ref,), (got,)
            for r, g in zip(ref, got):
                np.testing.assert_allclose(g, r, atol=1e-12, err_msg=name)

        # bn backward needs the forward's saved tensors
        out_py = kernels_py.bn_train_fwd(x, gamma, beta, 1e-5)
        for fwd, bwd in (("bn_train_fwd", "bn_train_bwd"), ("bn_eval_fwd", "bn_eval_bwd")):
            if fwd == "bn_train_fwd":
                _, xhat, inv_std, _, _ = out_py
            else:
                _, xhat, inv_std = kernels_py.bn_eval_fwd(x, gamma, beta, rm, rv, 1e-5)
            ref = getattr(kernels_py, bwd)(xhat, inv_std, gamma, y)
            got = getattr(_kernels_cy, bwd)(xhat, inv_std, gamma, y)
            for r, g in zip(ref, got):
                np.testing.assert_allclose(g, r, atol=1e-12, err_msg=bwd)

    def test_adam_update_parity(self):
        rng = np.random.default_rng(12)
        shape = (9, 5)
        p1 = np.ascontiguousarray(rng.normal(size=shape))
        g = np.ascontiguousarray(rng.normal(size=shape))
        p2, m1, v1 = p1.copy(), np.zeros(shape), np.zeros(shape)
        m2, v2 = np.zeros(shape), np.zeros(shape)
        for step in range(1, 4):
            kernels_py.adam_update(p1, g, m1, v1, 1e-3, 0.9, 0.999, 1e-8, step)
            _kernels_cy.adam_update(p2, g, m2, v2, 1e-3, 0.9, 0.999, 1e-8, step)
        np.testing.assert_allclose(p2, p1, atol=1e-15)
        np.testing.assert_allclose(m2, m1, atol=1e-15)
        np.testing.assert_allclose(v2, v1, atol=1e-15)

    def test_backend_switch_roundtrip(self):
        original = nd.backend_name()
        try:
            nd.select_backend("py")
            assert nd.backend_name() == "py"
            nd.select_backend("cy")
            assert nd.backend_name() == "cy"
        finally:
            nd.select_backend(original)
