"""Accuracy and equal-error-rate evaluation, grouped by gender and seen/unseen.

Conventions, stated once: the positive class is label 1 ("B stronger than A");
a pair is predicted positive when its score is >= the threshold (ties count
as positive); EER linearly interpolates between adjacent thresholds in
(FPR, FNR) space. A group's "Avg ACC" is the arithmetic mean of its M and F
cells.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import rtsa2, trainer
from .errors import EvaluationError

GROUPS = ("seen", "unseen")
REQUIRED_CELLS = tuple((g, s) for g in GROUPS for s in ("M", "F"))


@dataclass(frozen=True)
class ScoredPair:
    score: float
    label: int
    gender: str
    group: str
    attribute: int

    def __post_init__(self):
        if not (math.isfinite(self.score) and 0.0 <= self.score <= 1.0):
            raise EvaluationError(f"score must be finite in [0, 1], got {self.score}")
        if self.label not in (0, 1):
            raise EvaluationError(f"label must be 0/1, got {self.label}")


def accuracy(pairs: List[ScoredPair], threshold: float = 0.5) -> float:
    """Fraction of pairs where (score >= threshold) matches (label == 1)."""
    if not pairs:
        raise EvaluationError("accuracy of an empty pair list is undefined")
    hits = sum(1 for p in pairs if (p.score >= threshold) == (p.label == 1))
    return hits / len(pairs)


def _rates_at(scores, labels, threshold):
    pred = scores >= threshold
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    fpr = float(np.sum(pred & ~pos)) / n_neg
    fnr = float(np.sum(~pred & pos)) / n_pos
    return fpr, fnr


def eer(pairs: List[ScoredPair]) -> Tuple[float, float]:
    """Equal error rate and its crossing threshold.

    Sweeps every distinct score as a decision threshold (descending, plus one
    above the maximum); where FPR and FNR cross between adjacent thresholds
    the rates are linearly interpolated. Requires both classes present.
    """
    scores = np.array([p.score for p in pairs], dtype=np.float64)
    labels = np.array([p.label for p in pairs], dtype=np.intp)
    if len(pairs) == 0 or labels.min() == labels.max():
        raise EvaluationError("EER needs at least one positive and one negative pair")

    uniq = np.unique(scores)[::-1]
    thresholds = np.concatenate([[uniq[0] + 1.0], uniq])
    points = [_rates_at(scores, labels, t) for t in thresholds]

    prev_fpr, prev_fnr = points[0]
    prev_t = thresholds[0]
    for (fpr, fnr), t in zip(points[1:], thresholds[1:]):
        if fnr == fpr:
            return fpr, float(t)
        if fnr < fpr:  # crossed between the previous threshold and this one
            gap_prev = prev_fnr - prev_fpr
            gap_here = fpr - fnr
            alpha = gap_prev / (gap_prev + gap_here)
            eer_value = prev_fpr + alpha * (fpr - prev_fpr)
            threshold = prev_t + alpha * (t - prev_t)
            return float(eer_value), float(threshold)
        prev_fpr, prev_fnr, prev_t = fpr, fnr, t
    # FNR never dropped below FPR: the crossing sits at the sweep's end
    return float(prev_fnr), float(prev_t)


@dataclass
class CellMetrics:
    n: int
    acc: float
    eer: Optional[float]
    eer_threshold: Optional[float]


@dataclass
class EvalReport:
    cells: Dict[Tuple[str, str], Optional[CellMetrics]] = field(default_factory=dict)
    per_attribute: Dict[int, Tuple[int, float]] = field(default_factory=dict)

    def avg_acc(self, group):
        vals = [self.cells[(group, g)].acc for g in ("M", "F")
                if self.cells.get((group, g)) is not None]
        return sum(vals) / len(vals) if vals else None

    def empty_cells(self):
        return [cell for cell in REQUIRED_CELLS if self.cells.get(cell) is None]

    def to_text(self, vocab=None):
        lines = [f"{'group':<8} {'gender':<6} {'n':>6} {'ACC':>8} {'EER':>8}"]
        for group in GROUPS:
            for gender in ("M", "F"):
                m = self.cells.get((group, gender))
                if m is None:
                    lines.append(f"{group:<8} {gender:<6} {'-':>6} {'empty':>8} {'-':>8}")
                else:
                    eer_s = f"{m.eer:.4f}" if m.eer is not None else "n/a"
                    lines.append(f"{group:<8} {gender:<6} {m.n:>6} {m.acc:>8.4f} {eer_s:>8}")
            avg = self.avg_acc(group)
            avg_s = f"{avg:.4f}" if avg is not None else "empty"
            lines.append(f"{group:<8} {'avg':<6} {'':>6} {avg_s:>8} {'':>8}")
        if self.per_attribute:
            lines.append("")
            lines.append(f"{'attribute':<16} {'n':>6} {'ACC':>8}")
            for attr in sorted(self.per_attribute):
                n, acc = self.per_attribute[attr]
                name = vocab.name_of(attr) if vocab is not None else str(attr)
                lines.append(f"{name:<16} {n:>6} {acc:>8.4f}")
        return "\n".join(lines) + "\n"

    def to_csv(self, vocab=None):
        lines = ["section,group,gender_or_attr,n,acc,eer"]
        for group in GROUPS:
            for gender in ("M", "F"):
                m = self.cells.get((group, gender))
                if m is None:
                    lines.append(f"cell,{group},{gender},0,,")
                else:
                    eer_s = f"{m.eer:.9f}" if m.eer is not None else ""
                    lines.append(f"cell,{group},{gender},{m.n},{m.acc:.9f},{eer_s}")
            avg = self.avg_acc(group)
            avg_s = "" if avg is None else f"{avg:.9f}"
            lines.append(f"avg,{group},,,{avg_s},")
        for attr in sorted(self.per_attribute):
            n, acc = self.per_attribute[attr]
            name = vocab.name_of(attr) if vocab is not None else str(attr)
            lines.append(f"attribute,,{name},{n},{acc:.9f},")
        return "\n".join(lines) + "\n"


def score_examples(params, examples, group) -> List[ScoredPair]:
    """Eval-mode scores for one test list; gender taken from the pair itself."""
    if not examples:
        return []
    scores = trainer.predict_scores(params, examples)
    return [ScoredPair(float(s), ex.label, ex.emb_a.gender, group, ex.attribute)
            for s, ex in zip(scores, examples)]


def build_report(pairs: List[ScoredPair]) -> EvalReport:
    report = EvalReport()
    for group, gender in REQUIRED_CELLS:
        subset = [p for p in pairs if p.group == group and p.gender == gender]
        if not subset:
            report.cells[(group, gender)] = None
            continue
        try:
            eer_value, eer_thr = eer(subset)
        except EvaluationError:
            eer_value, eer_thr = None, None
        report.cells[(group, gender)] = CellMetrics(
            len(subset), accuracy(subset), eer_value, eer_thr)
    by_attr = {}
    for p in pairs:
        by_attr.setdefault(p.attribute, []).append(p)
    for attr, subset in by_attr.items():
        report.per_attribute[attr] = (len(subset), accuracy(subset))
    return report


def evaluate(params: rtsa2.ModelParams, split) -> EvalReport:
    """Score test_seen / test_unseen of a CorpusSplit and build the report."""
    if split.test_seen:
        dim = split.test_seen[0].emb_a.dim
    elif split.test_unseen:
        dim = split.test_unseen[0].emb_a.dim
    else:
        raise EvaluationError("split has no test examples")
    if dim != params.cfg.embed_dim:
        raise EvaluationError(
            f"embedding dim {dim} does not match checkpoint d={params.cfg.embed_dim}")
    pairs = score_examples(params, split.test_seen, "seen")
    pairs += score_examples(params, split.test_unseen, "unseen")
    return build_report(pairs)
