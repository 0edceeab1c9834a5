"""Core data model: embeddings, comparison records, training examples, splits."""

from dataclasses import dataclass, field
from typing import Dict, List, Set

import numpy as np

from ..errors import ConfigError, StoreError

GENDERS = ("M", "F")

ORIGIN_ANNOTATED = "annotated"
ORIGIN_MINED = "mined"


@dataclass(frozen=True)
class EmbeddingVector:
    """One utterance's timbre embedding (fixed dimension, finite values)."""

    values: np.ndarray
    utterance_id: str
    speaker_id: str
    gender: str

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise StoreError(f"embedding for {self.utterance_id} must be 1-D")
        if not np.isfinite(arr).all():
            raise StoreError(f"embedding for {self.utterance_id} has non-finite values")
        if self.gender not in GENDERS:
            raise StoreError(f"gender must be one of {GENDERS}, got {self.gender!r}")
        object.__setattr__(self, "values", arr)

    @property
    def dim(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class ComparisonRecord:
    """One ordered judgement: `stronger` beats `weaker` on `attribute`."""

    weaker: str
    stronger: str
    attribute: int
    origin: str = ORIGIN_ANNOTATED
    confidence: float = 1.0

    def __post_init__(self):
        if self.weaker == self.stronger:
            raise ConfigError(f"comparison of {self.weaker} with itself")
        if self.origin not in (ORIGIN_ANNOTATED, ORIGIN_MINED):
            raise ConfigError(f"bad origin {self.origin!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ConfigError(f"confidence must be in [0, 1], got {self.confidence}")
        if self.attribute < 0:
            raise ConfigError(f"negative attribute index {self.attribute}")


@dataclass(frozen=True)
class TrainingExample:
    """Utterance-level pair; label 1 means emb_b is the stronger side."""

    emb_a: EmbeddingVector
    emb_b: EmbeddingVector
    attribute: int
    label: int
    origin: str = ORIGIN_ANNOTATED

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ConfigError(f"label must be 0 or 1, got {self.label}")
        if self.emb_a.gender != self.emb_b.gender:
            raise ConfigError(
                f"cross-gender pair {self.emb_a.utterance_id} / {self.emb_b.utterance_id}")


def speakers_of(examples) -> Set[str]:
    out = set()
    for ex in examples:
        out.add(ex.emb_a.speaker_id)
        out.add(ex.emb_b.speaker_id)
    return out


@dataclass
class CorpusSplit:
    """Train/validation/seen/unseen example lists with their speaker sets."""

    train: List[TrainingExample]
    validation: List[TrainingExample]
    test_seen: List[TrainingExample]
    test_unseen: List[TrainingExample]
    speaker_sets: Dict[str, Set[str]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.speaker_sets:
            self.speaker_sets = {
                "train": speakers_of(self.train),
                "validation": speakers_of(self.validation),
                "test_seen": speakers_of(self.test_seen),
                "test_unseen": speakers_of(self.test_unseen),
            }
        overlap = self.speaker_sets["test_unseen"] & self.speaker_sets["train"]
        if overlap:
            raise ConfigError(f"unseen speakers leak into train: {sorted(overlap)}")

    def sizes(self):
        return {
            "train": len(self.train),
            "validation": len(self.validation),
            "test_seen": len(self.test_seen),
            "test_unseen": len(self.test_unseen),
        }
