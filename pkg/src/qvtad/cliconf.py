"""Flat key=value configuration shared by every subcommand.

Keys are namespaced by the dataclass they feed (synth.margin, model.n_heads,
train.lr, mine.min_votes, data.per_pair). Resolution order: dataclass
defaults, then the --config file, then --set overrides, then dedicated flags.
Unknown keys or unparseable values raise ConfigError.
"""

import dataclasses
import typing
from dataclasses import dataclass

from .errors import ConfigError
from .graph_augment import MiningConfig
from .rtsa2 import ModelConfig
from .trainer import TrainConfig


@dataclass(frozen=True)
class SynthSettings:
    """Arguments of corpus.synth_corpus, addressable as synth.*"""

    n_speakers: int = 16
    utt_per_speaker: int = 3
    d: int = 32
    k: int = 4
    margin: float = 0.15
    noise: float = 0.0
    per_pair: int = 4
    swap_augment: bool = True
    unseen_per_gender: typing.Optional[int] = None
    val_per_pair: int = 1
    seen_per_pair: int = 1


@dataclass(frozen=True)
class DataSettings:
    """Utterance-pair expansion knobs used when rebuilding splits from files."""

    per_pair: int = 4
    swap_augment: bool = True
    val_per_pair: int = 1
    seen_per_pair: int = 1


NAMESPACES = {
    "synth": SynthSettings,
    "data": DataSettings,
    "mine": MiningConfig,
    "model": ModelConfig,
    "train": TrainConfig,
}

_BOOL_WORDS = {"true": True, "1": True, "yes": True, "on": True,
               "false": False, "0": False, "no": False, "off": False}


def _coerce(raw, annotation, key):
    origin = typing.get_origin(annotation)
    if origin is typing.Union:  # Optional[...]
        args = [a for a in typing.get_args(annotation) if a is not type(None)]
        if raw.lower() in ("none", "null", ""):
            return None
        return _coerce(raw, args[0], key)
    if annotation is bool:
        try:
            return _BOOL_WORDS[raw.lower()]
        except KeyError:
            raise ConfigError(f"{key}: expected a boolean, got {raw!r}") from None
    if annotation is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if annotation is float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    return raw


def parse_config_file(path):
    """key=value lines, # comments; returns {key: raw string}."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def parse_set_args(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        out[key.strip()] = value.strip()
    return out


class ResolvedConfig:
    """All namespaced settings for one run, built from file + overrides."""

    def __init__(self, raw):
        self._values = {}  # namespace -> {field: coerced}
        fields_by_ns = {ns: {f.name: f for f in dataclasses.fields(cls)}
                        for ns, cls in NAMESPACES.items()}
        for key, raw_value in raw.items():
            ns, _, field_name = key.partition(".")
            if ns not in NAMESPACES or not field_name:
                raise ConfigError(f"unknown config key {key!r}")
            field = fields_by_ns[ns].get(field_name)
            if field is None:
                raise ConfigError(f"unknown config key {key!r}")
            self._values.setdefault(ns, {})[field_name] = _coerce(raw_value, field.type, key)

    def build(self, namespace, **forced):
        """Instantiate the namespace dataclass with overrides applied."""
        cls = NAMESPACES[namespace]
        kwargs = dict(self._values.get(namespace, {}))
        kwargs.update(forced)
        return cls(**kwargs)

    def dump(self, namespaces=None):
        """Fully resolved key=value lines (defaults included), for run logs."""
        lines = []
        for ns in namespaces or NAMESPACES:
            instance = self.build(ns)
            for f in dataclasses.fields(instance):
                lines.append(f"{ns}.{f.name}={getattr(instance, f.name)}")
        return lines


def load_resolved(config_path, set_pairs):
    raw = parse_config_file(config_path) if config_path else {}
    raw.update(parse_set_args(set_pairs))
    return ResolvedConfig(raw)
