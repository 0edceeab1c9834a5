"""Model configuration for the differential-attention comparator."""

from dataclasses import dataclass, field, fields

from ..errors import ConfigError


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters.

    `embed_dim` must match the embedding store; `n_attributes` the vocabulary.
    `lambda_init` sets the initial weight of the subtracted attention map (the
    learnable value is kept in (0, 1) by a logistic reparameterization).
    `per_head_norm` applies an RMS normalization to each head output scaled by
    (1 - lambda_init); off by default.
    """

    embed_dim: int = 256
    n_attributes: int = 34
    n_heads: int = 4
    lambda_init: float = 0.8
    scale_hidden: int = 128
    predictor_hidden: int = 512
    dropout_rate: float = 0.1
    use_value_projection: bool = True
    use_diff_attention: bool = True
    per_head_norm: bool = False

    def __post_init__(self):
        if self.embed_dim <= 0 or self.n_attributes <= 0:
            raise ConfigError("embed_dim and n_attributes must be positive")
        if self.n_heads <= 0 or self.embed_dim % self.n_heads != 0:
            raise ConfigError(
                f"n_heads ({self.n_heads}) must divide embed_dim ({self.embed_dim})")
        if not 0.0 < self.lambda_init < 1.0:
            raise ConfigError(f"lambda_init must be in (0, 1), got {self.lambda_init}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.scale_hidden <= 0 or self.predictor_hidden <= 0:
            raise ConfigError("hidden widths must be positive")

    @property
    def head_dim(self):
        return self.embed_dim // self.n_heads

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown ModelConfig keys: {sorted(unknown)}")
        return cls(**d)
