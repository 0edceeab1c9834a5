"""Learnable parameter set and its initialization."""

import math

import numpy as np

from .. import ndcompute as nd
from .config import ModelConfig


def _glorot(rng, fan_in, fan_out, shape=None):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    shape = shape or (fan_in, fan_out)
    return rng.uniform(-limit, limit, size=shape)


class ModelParams:
    """Named trainable tensors plus the predictor's batch-norm state.

    The batch-norm scale/shift live both in `tensors` (for the optimizer) and
    inside `bn` (for the normalization op); running statistics are
    non-trainable buffers serialized alongside the parameters.
    """

    def __init__(self, cfg, tensors, bn):
        self.cfg = cfg
        self.tensors = tensors
        self.bn = bn

    def __getitem__(self, name):
        return self.tensors[name]

    def __contains__(self, name):
        return name in self.tensors

    def names(self):
        return sorted(self.tensors)

    def trainable_items(self):
        return [(name, self.tensors[name]) for name in self.names()]

    def zero_grad(self):
        for t in self.tensors.values():
            t.zero_grad()

    def n_parameters(self):
        return sum(t.data.size for t in self.tensors.values())

    def head_lambda(self, head):
        """Current subtraction weight of one head, logistic(lambda_raw)."""
        raw = self.tensors[f"att.h{head}.lambda_raw"].data[0, 0]
        return 1.0 / (1.0 + math.exp(-raw))

    def validate_finite(self):
        for name, t in self.tensors.items():
            if not np.isfinite(t.data).all():
                return name
        return None

    def clone(self):
        tensors = {}
        for name, t in self.tensors.items():
            tensors[name] = nd.Tensor2(t.data.copy(), requires_grad=t.requires_grad)
        bn = nd.BatchNormState(self.bn.width, self.bn.momentum, self.bn.eps)
        bn.gamma = tensors["pred.bn.gamma"]
        bn.beta = tensors["pred.bn.beta"]
        bn.running_mean = self.bn.running_mean.copy()
        bn.running_var = self.bn.running_var.copy()
        return ModelParams(self.cfg, tensors, bn)


def init_params(cfg: ModelConfig, seed: int) -> ModelParams:
    """Variance-scaled uniform init; lambda_raw set so logistic(raw) == lambda_init."""
    rng = np.random.Generator(np.random.PCG64(seed))
    d = cfg.embed_dim
    hd = cfg.head_dim
    t = {}

    def param(name, arr):
        t[name] = nd.Tensor2(arr, requires_grad=True)

    if cfg.use_diff_attention:
        lambda_raw = math.log(cfg.lambda_init / (1.0 - cfg.lambda_init))
        for h in range(cfg.n_heads):
            param(f"att.h{h}.wq", _glorot(rng, d, 2 * hd))
            param(f"att.h{h}.wk", _glorot(rng, d, 2 * hd))
            if cfg.use_value_projection:
                param(f"att.h{h}.wv", _glorot(rng, d, hd))
            param(f"att.h{h}.lambda_raw", np.full((1, 1), lambda_raw))
        if cfg.use_value_projection:
            param("att.wo", _glorot(rng, d, d))
        param("scale.w1", _glorot(rng, 2 * d, cfg.scale_hidden))
        param("scale.b1", np.zeros((1, cfg.scale_hidden)))
        param("scale.w2", _glorot(rng, cfg.scale_hidden, 1))
        param("scale.b2", np.zeros((1, 1)))

    p = cfg.predictor_hidden
    param("pred.w1", _glorot(rng, 3 * d, p))
    param("pred.b1", np.zeros((1, p)))
    param("pred.w2", _glorot(rng, p, p))
    param("pred.b2", np.zeros((1, p)))
    param("pred.wout", _glorot(rng, p, cfg.n_attributes))
    param("pred.bout", np.zeros((1, cfg.n_attributes)))

    bn = nd.BatchNormState(p)
    t["pred.bn.gamma"] = bn.gamma
    t["pred.bn.beta"] = bn.beta
    return ModelParams(cfg, t, bn)
