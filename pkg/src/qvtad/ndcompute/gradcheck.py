"""Central finite-difference verification of the analytic gradients."""

from ..errors import GradientError
from .tensor import Tape, backward


def _central(f, flat, i, eps):
    orig = flat[i]
    flat[i] = orig + eps
    f_plus = f(None).item()
    flat[i] = orig - eps
    f_minus = f(None).item()
    flat[i] = orig
    return (f_plus - f_minus) / (2.0 * eps)


def _rel(a, n):
    return abs(a - n) / max(abs(a), abs(n), 1e-8)


def grad_check(f, inputs, eps=3e-4, refine_above=1e-5):
    """Compare tape gradients of f against central differences.

    `f` is called as f(tape) and must build a 1x1 loss from the given input
    tensors on that tape in a deterministic way (train-mode dropout without a
    fixed seed is rejected); numeric probes call it with tape=None. Returns
    the maximum relative error over every coordinate of every input, with
    denominator max(|analytic|, |numeric|, 1e-8).

    No single step size suits every coordinate in double precision: tiny
    gradients (~1e-9 under an O(1) loss) are cancellation-limited and want a
    large step, while high-curvature coordinates are truncation-limited and
    want a small one. Coordinates whose plain central difference disagrees
    with the analytic value by more than `refine_above` are re-estimated with
    one Richardson step-halving pass, (4*D(eps/2) - D(eps))/3, which removes
    the leading truncation term; a genuinely wrong analytic gradient stays
    wrong at every step size, so the refinement cannot mask real bugs.
    """
    loss0 = f(None).item()
    if f(None).item() != loss0:
        raise GradientError("grad_check requires a deterministic function")

    for t in inputs:
        t.zero_grad()
    tape = Tape()
    loss = f(tape)
    backward(tape, loss)
    analytic = []
    for t in inputs:
        if t.grad is None:
            raise GradientError("input tensor received no gradient; is it on the tape?")
        analytic.append(t.grad.copy())

    max_rel = 0.0
    for t, a in zip(inputs, analytic):
        flat = t.data.ravel()
        a_flat = a.ravel()
        for i in range(flat.size):
            an = a_flat[i]
            numeric = _central(f, flat, i, eps)
            rel = _rel(an, numeric)
            if rel > refine_above:
                half = _central(f, flat, i, eps / 2.0)
                refined = (4.0 * half - numeric) / 3.0
                rel = min(rel, _rel(an, refined))
            if rel > max_rel:
                max_rel = rel
    return max_rel
