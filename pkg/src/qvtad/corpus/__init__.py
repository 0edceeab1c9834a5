"""Data model, file formats, splits and the synthetic corpus generator."""

from .annotations import parse_annotations, write_annotations
from .expand import build_split, expand_to_utterance_pairs
from .splitfile import SECTIONS, parse_split_file, write_split_file
from .store import load_embedding_store, speakers_index, store_dim, write_embedding_store
from .synth import SynthCorpus, learnability_fixture, long_tail_corpus, synth_corpus
from .types import (
    GENDERS,
    ORIGIN_ANNOTATED,
    ORIGIN_MINED,
    ComparisonRecord,
    CorpusSplit,
    EmbeddingVector,
    TrainingExample,
    speakers_of,
)
from .vocab import AttributeVocab

__all__ = [
    "AttributeVocab", "ComparisonRecord", "CorpusSplit", "EmbeddingVector",
    "GENDERS", "ORIGIN_ANNOTATED", "ORIGIN_MINED", "SECTIONS", "SynthCorpus",
    "TrainingExample", "build_split", "expand_to_utterance_pairs",
    "learnability_fixture", "load_embedding_store", "long_tail_corpus",
    "parse_annotations", "parse_split_file", "speakers_index", "speakers_of",
    "store_dim", "synth_corpus", "write_annotations", "write_embedding_store",
    "write_split_file",
]
