"""Synthetic desk-scale corpus with known latent attribute strengths.

Each speaker gets a latent strength per attribute, drawn uniformly; utterance
embeddings are a fixed random linear map of the speaker's latent vector plus
isotropic noise (noise=0 makes every comparison exactly decodable). A record
(A, B, attr) is emitted only when strength(B) - strength(A) > margin, and only
for same-gender pairs within the same split family, so unseen test speakers
never share a record with train speakers.
"""

import math
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from ..errors import ConfigError, EmptyCorpusError
from .expand import build_split
from .types import ComparisonRecord, CorpusSplit, EmbeddingVector
from .vocab import AttributeVocab


@dataclass
class SynthCorpus:
    store: Dict[str, EmbeddingVector]
    records: List[ComparisonRecord]
    split: CorpusSplit
    sections: Dict[str, List[str]]
    vocab: AttributeVocab
    speakers: List[str]
    genders: Dict[str, str]
    latent: np.ndarray  # (n_speakers, k) strengths backing the records


def _derive(seed, salt):
    return (seed * 0x9E3779B97F4A7C15 + salt) % (2 ** 63)


def synth_corpus(n_speakers, utt_per_speaker=3, d=32, k=4, margin=0.25, noise=0.0,
                 seed=0, per_pair=4, swap_augment=True, unseen_per_gender=None,
                 val_per_pair=1, seen_per_pair=1) -> SynthCorpus:
    if n_speakers < 4:
        raise ConfigError("need at least 4 speakers (2 per gender)")
    if margin <= 0:
        raise ConfigError("margin must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))

    speakers = [f"spk{i:03d}" for i in range(n_speakers)]
    genders = {spk: ("M" if i % 2 == 0 else "F") for i, spk in enumerate(speakers)}
    latent = rng.uniform(0.0, 1.0, size=(n_speakers, k))
    mix = rng.normal(0.0, 1.0 / math.sqrt(k), size=(d, k))

    store = {}
    for i, spk in enumerate(speakers):
        base = mix @ latent[i]
        for j in range(utt_per_speaker):
            values = base + (noise * rng.normal(size=d) if noise > 0.0 else 0.0)
            utt_id = f"{spk}_u{j:02d}"
            # stored as float32 on disk; quantize now so round trips are bit-exact
            store[utt_id] = EmbeddingVector(
                values.astype(np.float32).astype(np.float64), utt_id, spk, genders[spk])

    by_gender = {"M": [s for s in speakers if genders[s] == "M"],
                 "F": [s for s in speakers if genders[s] == "F"]}
    if unseen_per_gender is None:
        unseen_per_gender = max(1, round(len(by_gender["M"]) / 3))
    for g, members in by_gender.items():
        if len(members) - unseen_per_gender < 2 or unseen_per_gender < 1:
            raise ConfigError(f"gender {g}: cannot hold out {unseen_per_gender} "
                              f"of {len(members)} speakers")
    unseen = {g: members[-unseen_per_gender:] for g, members in by_gender.items()}
    train = {g: members[:-unseen_per_gender] for g, members in by_gender.items()}
    sections = {
        "train": sorted(train["M"] + train["F"]),
        "validation": sorted(train["M"] + train["F"]),
        "test_seen": sorted(train["M"] + train["F"]),
        "test_unseen": sorted(unseen["M"] + unseen["F"]),
    }

    idx = {spk: i for i, spk in enumerate(speakers)}
    records = []
    for attr in range(k):
        for family in (train, unseen):
            for g in ("M", "F"):
                members = family[g]
                for a in members:
                    for b in members:
                        if a == b:
                            continue
                        if latent[idx[b], attr] - latent[idx[a], attr] > margin:
                            records.append(ComparisonRecord(a, b, attr))
    if not records:
        raise EmptyCorpusError(
            f"margin {margin} leaves no comparable pairs among {n_speakers} speakers")

    split = build_split(records, store, sections, per_pair=per_pair,
                        swap_augment=swap_augment, seed=_derive(seed, 1),
                        val_per_pair=val_per_pair, seen_per_pair=seen_per_pair)
    vocab = AttributeVocab([f"attr{i:02d}" for i in range(k)])
    return SynthCorpus(store, records, split, sections, vocab, speakers, genders, latent)


def learnability_fixture(seed=7) -> SynthCorpus:
    """Noise-free 12-speaker, 4-attribute corpus every default model must learn."""
    return synth_corpus(
        n_speakers=12, utt_per_speaker=5, d=32, k=4, margin=0.12, noise=0.0,
        seed=seed, per_pair=20, swap_augment=True, unseen_per_gender=2,
        val_per_pair=2, seen_per_pair=2)


def long_tail_corpus(seed=0, n_speakers=24, utt_per_speaker=2, d=16, head_attrs=6,
                     tail_attrs=2, margin=0.02, unseen_per_gender=3) -> SynthCorpus:
    """Corpus with dense head attributes and chain-only tail attributes.

    Head attributes keep every margin-passing pair. Tail attributes keep only
    the consecutive edges of each gender's latent-sorted chain, so their share
    of the records is small but their transitive closure is much larger -
    exactly the situation graph mining is meant to repair.
    """
    k = head_attrs + tail_attrs
    base = synth_corpus(
        n_speakers=n_speakers, utt_per_speaker=utt_per_speaker, d=d, k=k,
        margin=margin, noise=0.0, seed=seed, per_pair=2, swap_augment=True,
        unseen_per_gender=unseen_per_gender)

    idx = {spk: i for i, spk in enumerate(base.speakers)}
    tail = set(range(head_attrs, k))
    chain_edges = set()
    unseen_set = set(base.sections["test_unseen"])
    families = {}
    for spk in base.speakers:
        fam = "unseen" if spk in unseen_set else "train"
        families.setdefault((fam, base.genders[spk]), []).append(spk)
    for attr in tail:
        for members in families.values():
            ordered = sorted(members, key=lambda s: base.latent[idx[s], attr])
            for a, b in zip(ordered, ordered[1:]):
                chain_edges.add((a, b, attr))

    records = [r for r in base.records
               if r.attribute not in tail or (r.weaker, r.stronger, r.attribute) in chain_edges]
    split = build_split(records, base.store, base.sections, per_pair=2,
                        swap_augment=True, seed=_derive(seed, 1))
    return SynthCorpus(base.store, records, split, base.sections, base.vocab,
                       base.speakers, base.genders, base.latent)
