#!/usr/bin/env python3
"""Benchmark the numpy kernels against the compiled overrides.

Two views: per-primitive microbenchmarks on training-shaped arrays, and
end-to-end training-step throughput on a synthetic batch. matmul/affine are
not overridden (both backends call BLAS through numpy), so the gap comes from
the elementwise/softmax/normalization primitives and their backward rules.

Run: python3 benchmarks/bench_kernels.py [--batch 256] [--steps 20]
"""

import argparse
import time

import numpy as np

from qvtad import ndcompute as nd
from qvtad import corpus, rtsa2, trainer
from qvtad.ndcompute import kernels_py

try:
    from qvtad.ndcompute import _kernels_cy
except ImportError:
    _kernels_cy = None


def _time(fn, *args, repeat=2000):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_primitives(batch):
    rng = np.random.default_rng(0)
    x = np.ascontiguousarray(rng.normal(size=(batch, 64)))
    y = np.ascontiguousarray(rng.normal(size=(batch, 64)))
    col = np.ascontiguousarray(rng.normal(size=(batch, 1)))
    two = np.ascontiguousarray(rng.normal(size=(batch, 2)))
    gamma = np.ones((1, 64))
    beta = np.zeros((1, 64))
    prob = np.ascontiguousarray(rng.uniform(0.01, 0.99, size=(batch, 1)))
    labels = np.ascontiguousarray(rng.integers(0, 2, size=(batch, 1)).astype(float))

    cases = [
        ("row_softmax (Bx2)", "row_softmax", (two,)),
        ("tanh_fwd (Bx64)", "tanh_fwd", (x,)),
        ("sigmoid_fwd (Bx64)", "sigmoid_fwd", (x,)),
        ("rowsum_mul (Bx64)", "rowsum_mul", (x, y)),
        ("mul_colvec (Bx64)", "mul_colvec", (x, col)),
        ("row_l2norm (Bx64)", "row_l2norm", (x,)),
        ("bce_mean (Bx1)", "bce_mean", (prob, labels)),
        ("bn_train_fwd (Bx64)", "bn_train_fwd", (x, gamma, beta, 1e-5)),
    ]
    print(f"{'primitive':<22} {'numpy':>12} {'compiled':>12} {'speedup':>8}")
    for label, name, args in cases:
        t_py = _time(getattr(kernels_py, name), *args)
        if _kernels_cy is not None and hasattr(_kernels_cy, name):
            t_cy = _time(getattr(_kernels_cy, name), *args)
            print(f"{label:<22} {t_py * 1e6:>10.2f}us {t_cy * 1e6:>10.2f}us {t_py / t_cy:>7.2f}x")
        else:
            print(f"{label:<22} {t_py * 1e6:>10.2f}us {'n/a':>12} {'':>8}")


def bench_training_step(batch, steps):
    fx = corpus.synth_corpus(n_speakers=12, utt_per_speaker=4, d=32, k=4,
                             margin=0.12, seed=0, per_pair=8)
    examples = fx.split.train
    mcfg = rtsa2.ModelConfig(embed_dim=32, n_attributes=4)
    tcfg = trainer.TrainConfig(batch_size=batch, epochs=1, seed=0)

    print(f"\ntraining steps (batch={batch}, d=32, 4 heads, {len(examples)} examples)")
    print(f"{'backend':<10} {'per step':>12} {'examples/s':>12}")
    results = {}
    for name in nd.available_backends():
        nd.select_backend(name)
        params = rtsa2.init_params(mcfg, seed=0)
        state = trainer.AdamState(params)
        chunk = examples[:batch]
        ea = np.stack([ex.emb_a.values for ex in chunk])
        eb = np.stack([ex.emb_b.values for ex in chunk])
        attrs = np.array([ex.attribute for ex in chunk])
        labels = np.array([float(ex.label) for ex in chunk])

        def step(i):
            tape = nd.Tape()
            probs, _ = rtsa2.forward_batch(tape, params, ea, eb, train_mode=True,
                                           dropout_seed=i)
            loss = rtsa2.masked_loss(tape, probs, attrs, labels)
            params.zero_grad()
            nd.backward(tape, loss)
            grads = {n: t.grad for n, t in params.trainable_items() if t.grad is not None}
            trainer.adam_step(params, grads, state, tcfg)

        step(0)
        t0 = time.perf_counter()
        for i in range(steps):
            step(i + 1)
        per_step = (time.perf_counter() - t0) / steps
        results[name] = per_step
        print(f"{name:<10} {per_step * 1e3:>10.2f}ms {batch / per_step:>12.0f}")
    if len(results) == 2:
        print(f"compiled speedup: {results['py'] / results['cy']:.2f}x")
    nd.select_backend("cy" if "cy" in nd.available_backends() else "py")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--batch", type=int, default=256)
    ap.add_argument("--steps", type=int, default=20)
    args = ap.parse_args()
    print(f"available backends: {nd.available_backends()}\n")
    bench_primitives(args.batch)
    bench_training_step(args.batch, args.steps)
