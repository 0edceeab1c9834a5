"""Differential-attention pair comparator.

The pair sequence length is fixed at two (embedding A, embedding B), so the
per-head 2x2 attention maps are computed batch-wise from row-wise dot
products: for a batch of pairs, the four score entries per head are (B, 1)
columns, softmax runs over the two key positions, and the attended embeddings
come out as (B, d) matrices. The same code path serves single-pair inference
(B = 1), from which the full 2x2 maps are reassembled for inspection.

No positional encoding of any kind is applied: with a fixed two-token pair
there is no context ordering to encode beyond the row roles themselves.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .. import ndcompute as nd
from ..errors import ShapeError
from .params import ModelParams

_SEED_MIX = 0x9E3779B97F4A7C15


def _derived_seed(seed, salt):
    return (seed * _SEED_MIX + salt) % (2 ** 63)


@dataclass
class PairFeatures:
    """Graph handles for the contrastive features of a batch of pairs."""

    e_a_att: nd.Tensor2          # (B, d)
    e_b_att: nd.Tensor2          # (B, d)
    delta_hat: nd.Tensor2        # (B, d)
    gamma: Optional[nd.Tensor2]  # (B, 1); None when the diff block is bypassed
    attn_rows: list              # per head: (alpha_a (B,2), alpha_b (B,2))


@dataclass
class ForwardTrace:
    """Inspectable outcome of one pair comparison."""

    e_a_att: np.ndarray
    e_b_att: np.ndarray
    delta_hat: np.ndarray
    gamma: float
    attn_maps: List[np.ndarray]      # per head, 2x2: rows = query token, cols = key token
    probs: np.ndarray                # (n_attributes,)
    _tape: nd.Tape = field(repr=False, default=None)
    _probs_tensor: nd.Tensor2 = field(repr=False, default=None)


def _head_attention(tape, params, cfg, ea, eb, head):
    """One differential attention head over a batch of pairs.

    Returns (attended_a (B,hd), attended_b (B,hd), alpha_a (B,2), alpha_b (B,2)).
    """
    hd = cfg.head_dim
    wq = params[f"att.h{head}.wq"]
    wk = params[f"att.h{head}.wk"]
    qa = nd.matmul(tape, ea, wq)
    qb = nd.matmul(tape, eb, wq)
    ka = nd.matmul(tape, ea, wk)
    kb = nd.matmul(tape, eb, wk)

    inv_sqrt = 1.0 / math.sqrt(hd)
    lam = nd.sigmoid(tape, params[f"att.h{head}.lambda_raw"])

    def attn_row(q, split):
        q_part = nd.slice_cols(tape, q, split * hd, (split + 1) * hd)
        ka_part = nd.slice_cols(tape, ka, split * hd, (split + 1) * hd)
        kb_part = nd.slice_cols(tape, kb, split * hd, (split + 1) * hd)
        s_a = nd.scale(tape, nd.rowsum_mul(tape, q_part, ka_part), inv_sqrt)
        s_b = nd.scale(tape, nd.rowsum_mul(tape, q_part, kb_part), inv_sqrt)
        return nd.row_softmax(tape, nd.concat_cols(tape, [s_a, s_b]))

    alpha_a = nd.sub(tape, attn_row(qa, 0), nd.scale(tape, attn_row(qa, 1), lam))
    alpha_b = nd.sub(tape, attn_row(qb, 0), nd.scale(tape, attn_row(qb, 1), lam))

    if cfg.use_value_projection:
        wv = params[f"att.h{head}.wv"]
        va = nd.matmul(tape, ea, wv)
        vb = nd.matmul(tape, eb, wv)
    else:
        va = nd.slice_cols(tape, ea, head * hd, (head + 1) * hd)
        vb = nd.slice_cols(tape, eb, head * hd, (head + 1) * hd)

    def attend(alpha):
        w_a = nd.slice_cols(tape, alpha, 0, 1)
        w_b = nd.slice_cols(tape, alpha, 1, 2)
        return nd.add(tape, nd.mul_colvec(tape, va, w_a), nd.mul_colvec(tape, vb, w_b))

    att_a, att_b = attend(alpha_a), attend(alpha_b)
    if cfg.per_head_norm:
        gain = 1.0 - cfg.lambda_init
        att_a = nd.scale(tape, nd.rms_norm(tape, att_a), gain)
        att_b = nd.scale(tape, nd.rms_norm(tape, att_b), gain)
    return att_a, att_b, alpha_a, alpha_b


def gamma_net(tape, params, e_a_att, e_b_att):
    """Input-dependent contrast amplification in (0, 2): 2 * logistic(f([a; b]))."""
    cat = nd.concat_cols(tape, [e_a_att, e_b_att])
    h = nd.tanh(tape, nd.affine(tape, cat, params["scale.w1"], params["scale.b1"]))
    u = nd.affine(tape, h, params["scale.w2"], params["scale.b2"])
    return nd.scale(tape, nd.sigmoid(tape, u), 2.0)


def delta_amplify(tape, e_a_att, e_b_att, gamma):
    """tanh(delta) * ||delta||_2 * gamma with delta = e_b_att - e_a_att (row-wise)."""
    delta = nd.sub(tape, e_b_att, e_a_att)
    norm = nd.l2_norm(tape, delta)
    return nd.mul_colvec(tape, nd.mul_colvec(tape, nd.tanh(tape, delta), norm), gamma)


def pair_features(tape, params, ea, eb, cfg=None):
    """Contrastive features for a batch of pairs; ea/eb are (B, d) tensors."""
    cfg = cfg or params.cfg
    if ea.shape != eb.shape or ea.cols != cfg.embed_dim:
        raise ShapeError(f"pair_features: {ea.shape} / {eb.shape} vs d={cfg.embed_dim}")
    if not cfg.use_diff_attention:
        delta = nd.sub(tape, eb, ea)
        return PairFeatures(ea, eb, delta, None, [])

    head_a, head_b, attn_rows = [], [], []
    for h in range(cfg.n_heads):
        att_a, att_b, alpha_a, alpha_b = _head_attention(tape, params, cfg, ea, eb, h)
        head_a.append(att_a)
        head_b.append(att_b)
        attn_rows.append((alpha_a, alpha_b))
    e_a_att = nd.concat_cols(tape, head_a)
    e_b_att = nd.concat_cols(tape, head_b)
    if cfg.use_value_projection:
        wo = params["att.wo"]
        e_a_att = nd.matmul(tape, e_a_att, wo)
        e_b_att = nd.matmul(tape, e_b_att, wo)

    gamma = gamma_net(tape, params, e_a_att, e_b_att)
    delta_hat = delta_amplify(tape, e_a_att, e_b_att, gamma)
    return PairFeatures(e_a_att, e_b_att, delta_hat, gamma, attn_rows)


def predictor_probs(tape, params, feats, train_mode=False, dropout_seed=0):
    """Probability per attribute that B is stronger than A, shape (B, K)."""
    cfg = params.cfg
    z = nd.concat_cols(tape, [feats.e_a_att, feats.e_b_att, feats.delta_hat])
    a1 = nd.affine(tape, z, params["pred.w1"], params["pred.b1"])
    h1 = nd.tanh(tape, nd.batch_stat_norm(tape, a1, params.bn, train_mode))
    h1 = nd.dropout(tape, h1, cfg.dropout_rate, _derived_seed(dropout_seed, 1), train_mode)
    h2 = nd.tanh(tape, nd.affine(tape, h1, params["pred.w2"], params["pred.b2"]))
    h2 = nd.dropout(tape, h2, cfg.dropout_rate, _derived_seed(dropout_seed, 2), train_mode)
    logits = nd.affine(tape, h2, params["pred.wout"], params["pred.bout"])
    return nd.sigmoid(tape, logits)


def forward_batch(tape, params, ea_values, eb_values, train_mode=False, dropout_seed=0):
    """Run a batch of raw embedding pairs through the full model.

    ea_values/eb_values are (B, d) float arrays (frozen encoder outputs, never
    trained). Returns (probs tensor (B, K), PairFeatures).
    """
    ea = nd.Tensor2(np.atleast_2d(ea_values))
    eb = nd.Tensor2(np.atleast_2d(eb_values))
    feats = pair_features(tape, params, ea, eb)
    probs = predictor_probs(tape, params, feats, train_mode, dropout_seed)
    return probs, feats


def masked_loss(tape, probs, attributes, labels):
    """Mean BCE over the batch, supervised only on each pair's target attribute."""
    picked = nd.take_per_row(tape, probs, attributes)
    y = np.asarray(labels, dtype=np.float64).reshape(-1, 1)
    return nd.bce(tape, picked, y)


def forward(emb_a, emb_b, params: ModelParams, train_mode=False, dropout_seed=0) -> ForwardTrace:
    """Compare one pair of embedding vectors; returns an inspectable trace."""
    cfg = params.cfg
    a = np.asarray(getattr(emb_a, "values", emb_a), dtype=np.float64).reshape(1, -1)
    b = np.asarray(getattr(emb_b, "values", emb_b), dtype=np.float64).reshape(1, -1)
    if a.shape[1] != cfg.embed_dim or b.shape[1] != cfg.embed_dim:
        raise ShapeError(
            f"embedding dims {a.shape[1]}/{b.shape[1]} do not match model d={cfg.embed_dim}")
    tape = nd.Tape()
    probs, feats = forward_batch(tape, params, a, b, train_mode, dropout_seed)
    maps = []
    for alpha_a, alpha_b in feats.attn_rows:
        maps.append(np.vstack([alpha_a.data[0], alpha_b.data[0]]))
    gamma = float(feats.gamma.data[0, 0]) if feats.gamma is not None else 1.0
    return ForwardTrace(
        e_a_att=feats.e_a_att.data[0].copy(),
        e_b_att=feats.e_b_att.data[0].copy(),
        delta_hat=feats.delta_hat.data[0].copy(),
        gamma=gamma,
        attn_maps=maps,
        probs=probs.data[0].copy(),
        _tape=tape,
        _probs_tensor=probs,
    )


def masked_bce(trace: ForwardTrace, attribute: int, label: int) -> nd.Tensor2:
    """BCE on the single target attribute of a trace; differentiable 1x1 tensor."""
    if not 0 <= attribute < trace.probs.shape[0]:
        raise ShapeError(f"attribute index {attribute} out of {trace.probs.shape[0]}")
    return masked_loss(trace._tape, trace._probs_tensor, [attribute], [label])


def diff_attention(E, params: ModelParams, head: int):
    """One head's differential attention over a stacked 2 x d pair.

    Returns (attended 2 x head_dim array, weights 2 x 2 array) where weights
    rows are the query tokens and columns the key tokens.
    """
    E = np.asarray(E, dtype=np.float64)
    if E.shape != (2, params.cfg.embed_dim):
        raise ShapeError(f"diff_attention expects (2, {params.cfg.embed_dim}), got {E.shape}")
    tape = nd.Tape()
    ea = nd.Tensor2(E[0:1, :])
    eb = nd.Tensor2(E[1:2, :])
    att_a, att_b, alpha_a, alpha_b = _head_attention(tape, params, params.cfg, ea, eb, head)
    attended = np.vstack([att_a.data[0], att_b.data[0]])
    weights = np.vstack([alpha_a.data[0], alpha_b.data[0]])
    return attended, weights


def gamma_scale(e_a_att, e_b_att, params: ModelParams) -> float:
    """Amplification factor for one attended pair, always in (0, 2)."""
    a = nd.Tensor2(np.asarray(e_a_att, dtype=np.float64).reshape(1, -1))
    b = nd.Tensor2(np.asarray(e_b_att, dtype=np.float64).reshape(1, -1))
    return gamma_net(None, params, a, b).item()


def amplify_delta(e_a_att, e_b_att, gamma: float) -> np.ndarray:
    """Amplified difference vector for one attended pair."""
    a = nd.Tensor2(np.asarray(e_a_att, dtype=np.float64).reshape(1, -1))
    b = nd.Tensor2(np.asarray(e_b_att, dtype=np.float64).reshape(1, -1))
    g = nd.Tensor2(np.array([[float(gamma)]]))
    return delta_amplify(None, a, b, g).data[0].copy()
