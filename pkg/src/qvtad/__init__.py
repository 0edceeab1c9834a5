"""Relative voice-timbre attribute toolkit.

Mines pseudo-labeled comparison pairs from ordered timbre annotations via
per-attribute directed graphs, and trains/evaluates a differential-attention
comparator that predicts which of two speaker embeddings expresses a given
attribute more strongly.
"""

__version__ = "0.1.0"

from . import corpus, evaluator, graph_augment, ndcompute, rtsa2, trainer  # noqa: F401
