"""Adam training loop over utterance pair examples.

Single process, deterministic given (seed, config, data): shuffling, dropout
and initialization all derive from the run seed. Embedding inputs are data,
never parameters - the upstream encoder stays frozen. The best-validation
checkpoint is retained; a non-finite loss or gradient aborts with the last
good parameters attached to the raised TrainingDiverged.
"""

import time
from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional

import numpy as np

from . import ndcompute as nd
from . import rtsa2
from .corpus.types import ORIGIN_ANNOTATED
from .errors import ConfigError, TrainingDiverged


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 20
    batch_size: int = 256
    seed: int = 0
    shuffle: bool = True
    grad_clip: Optional[float] = None
    checkpoint_every: int = 0  # epochs; 0 = only the best checkpoint

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ConfigError("beta1/beta2 must be in (0, 1)")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("bad epochs/batch_size")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown TrainConfig keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class AblationFlags:
    """Switches mirroring the component-removal study."""

    no_augment: bool = False      # drop mined records from the train split
    no_rtsa2: bool = False        # bypass the differential block (plain concat)
    no_value_proj: bool = False   # heads read raw embedding slices


class AdamState:
    """First/second moment buffers per parameter plus the step counter."""

    def __init__(self, params: rtsa2.ModelParams):
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}
        for name, tensor in params.trainable_items():
            self.m[name] = np.zeros_like(tensor.data)
            self.v[name] = np.zeros_like(tensor.data)
        self.t = 0


def adam_step(params: rtsa2.ModelParams, grads: Dict[str, np.ndarray],
              state: AdamState, cfg: TrainConfig):
    """Bias-corrected Adam update, in place. Rejects non-finite gradients."""
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise TrainingDiverged(f"non-finite gradient for {name}")
    state.t += 1
    for name, tensor in params.trainable_items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(tensor.data)
        nd.K.adam_update(tensor.data, g, state.m[name], state.v[name],
                         cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, state.t)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_acc: float
    seconds: float


@dataclass
class TrainHistory:
    epochs: List[EpochStats] = field(default_factory=list)

    def to_csv(self):
        lines = ["epoch,train_loss,val_acc,seconds"]
        for e in self.epochs:
            lines.append(f"{e.epoch},{e.train_loss:.8f},{e.val_acc:.6f},{e.seconds:.3f}")
        return "\n".join(lines) + "\n"


def _stack_examples(examples):
    ea = np.stack([ex.emb_a.values for ex in examples])
    eb = np.stack([ex.emb_b.values for ex in examples])
    attrs = np.array([ex.attribute for ex in examples], dtype=np.intp)
    labels = np.array([ex.label for ex in examples], dtype=np.float64)
    return ea, eb, attrs, labels


def predict_scores(params, examples, batch_size=512):
    """Eval-mode probability of "B stronger" on each example's target attribute."""
    scores = np.empty(len(examples))
    for lo in range(0, len(examples), batch_size):
        chunk = examples[lo:lo + batch_size]
        ea, eb, attrs, _ = _stack_examples(chunk)
        probs, _ = rtsa2.forward_batch(None, params, ea, eb, train_mode=False)
        scores[lo:lo + len(chunk)] = probs.data[np.arange(len(chunk)), attrs]
    return scores


def _validation_acc(params, examples):
    if not examples:
        return float("nan")
    scores = predict_scores(params, examples)
    labels = np.array([ex.label for ex in examples])
    return float(np.mean((scores >= 0.5) == (labels == 1)))


def _batches(n, batch_size, order):
    """Contiguous slices of the permuted index order; a trailing singleton is
    folded into the previous batch so train-mode batch norm always sees >= 2 rows."""
    bounds = list(range(0, n, batch_size)) + [n]
    slices = [order[a:b] for a, b in zip(bounds, bounds[1:])]
    if len(slices) >= 2 and len(slices[-1]) == 1:
        slices[-2] = np.concatenate([slices[-2], slices[-1]])
        slices.pop()
    return slices


def train(dataset, cfg: TrainConfig, mcfg: rtsa2.ModelConfig,
          ablations: AblationFlags = AblationFlags(), on_epoch=None):
    """Train on dataset.train, validate each epoch, keep the best checkpoint.

    `on_epoch(epoch, params)` fires after each completed epoch (periodic
    checkpointing hooks in here). Returns (best ModelParams, TrainHistory).
    """
    if ablations.no_rtsa2 or ablations.no_value_proj:
        mcfg = rtsa2.ModelConfig(**{
            **{f.name: getattr(mcfg, f.name) for f in fields(rtsa2.ModelConfig)},
            "use_diff_attention": mcfg.use_diff_attention and not ablations.no_rtsa2,
            "use_value_projection": mcfg.use_value_projection and not ablations.no_value_proj,
        })
    examples = dataset.train
    if ablations.no_augment:
        examples = [ex for ex in examples if ex.origin == ORIGIN_ANNOTATED]
    if not examples and cfg.epochs > 0:
        raise ConfigError("empty train split")
    if cfg.batch_size < 2 and len(examples) > 1:
        raise ConfigError("batch_size must be >= 2 (train-mode batch norm needs "
                          "at least two rows)")

    params = rtsa2.init_params(mcfg, seed=cfg.seed)
    state = AdamState(params)
    history = TrainHistory()
    best_params = params.clone()
    best_acc = -1.0
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    n = len(examples)

    for epoch in range(1, cfg.epochs + 1):
        tic = time.perf_counter()
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        losses = []
        for step, batch_idx in enumerate(_batches(n, cfg.batch_size, order)):
            batch = [examples[i] for i in batch_idx]
            ea, eb, attrs, labels = _stack_examples(batch)
            tape = nd.Tape()
            try:
                probs, _ = rtsa2.forward_batch(
                    tape, params, ea, eb, train_mode=True,
                    dropout_seed=cfg.seed * 1_000_003 + epoch * 1_009 + step)
                loss = rtsa2.masked_loss(tape, probs, attrs, labels)
            except Exception as exc:
                raise TrainingDiverged(f"forward failed at epoch {epoch}: {exc}",
                                       params=best_params, history=history) from exc
            loss_val = loss.item()
            if not np.isfinite(loss_val):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}",
                                       params=best_params, history=history)
            losses.append(loss_val)
            params.zero_grad()
            nd.backward(tape, loss)
            grads = {name: t.grad for name, t in params.trainable_items() if t.grad is not None}
            if cfg.grad_clip is not None:
                total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
                if total > cfg.grad_clip:
                    factor = cfg.grad_clip / total
                    grads = {name: g * factor for name, g in grads.items()}
            try:
                adam_step(params, grads, state, cfg)
            except TrainingDiverged as exc:
                raise TrainingDiverged(str(exc), params=best_params, history=history) from None

        val_acc = _validation_acc(params, dataset.validation)
        history.epochs.append(EpochStats(
            epoch, float(np.mean(losses)) if losses else float("nan"),
            val_acc, time.perf_counter() - tic))
        if not np.isnan(val_acc) and val_acc > best_acc:
            best_acc = val_acc
            best_params = params.clone()
        elif np.isnan(val_acc):
            best_params = params.clone()  # no validation set: keep latest
        if on_epoch is not None:
            on_epoch(epoch, params)

    return best_params, history
