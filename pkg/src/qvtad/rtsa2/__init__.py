"""Differential-attention timbre comparator (model, params, checkpoints)."""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ModelConfig
from .model import (
    ForwardTrace,
    PairFeatures,
    amplify_delta,
    diff_attention,
    forward,
    forward_batch,
    gamma_scale,
    masked_bce,
    masked_loss,
    pair_features,
    predictor_probs,
)
from .params import ModelParams, init_params

__all__ = [
    "ForwardTrace", "ModelConfig", "ModelParams", "PairFeatures",
    "amplify_delta", "diff_attention", "forward", "forward_batch",
    "gamma_scale", "init_params", "load_checkpoint", "masked_bce",
    "masked_loss", "pair_features", "predictor_probs", "save_checkpoint",
]
