"""Exception hierarchy shared across the toolkit."""


class QvtadError(Exception):
    """Base class for all toolkit errors."""


class FormatError(QvtadError):
    """A data file violates its declared format (bad line, bad header, ...)."""


class VocabularyError(QvtadError):
    """An attribute name or index is not part of the vocabulary."""


class StoreError(QvtadError):
    """Embedding store is inconsistent (truncated blob, bad dim, non-finite)."""


class EmptyCorpusError(QvtadError):
    """A corpus configuration produced no usable comparison records."""


class ShapeError(QvtadError):
    """Tensor shapes are incompatible with the requested primitive."""


class NumericError(QvtadError):
    """A numeric operation produced a non-finite value."""


class GradientError(QvtadError):
    """Backward pass misuse (non-scalar loss, tensor not on the tape, ...)."""


class ConfigError(QvtadError):
    """Invalid or conflicting configuration values."""


class EvaluationError(QvtadError):
    """Metric is undefined for the given inputs (e.g. single-class EER)."""


class TrainingDiverged(QvtadError):
    """Training hit a non-finite loss or gradient.

    Carries the last good checkpoint so callers can still persist it.
    """

    def __init__(self, message, params=None, history=None):
        super().__init__(message)
        self.params = params
        self.history = history
