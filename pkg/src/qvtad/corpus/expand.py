"""Speaker-level records -> utterance-level training examples."""

import numpy as np

from ..errors import StoreError
from .store import speakers_index
from .types import ORIGIN_ANNOTATED, CorpusSplit, TrainingExample


def _combos(record, spk_index):
    for side in (record.weaker, record.stronger):
        if side not in spk_index:
            raise StoreError(f"speaker {side!r} has no utterances in the store")
    return [(uw, us) for uw in spk_index[record.weaker] for us in spk_index[record.stronger]]


def _emit(store, record, combo_list, swap_augment):
    out = []
    for uw, us in combo_list:
        weak, strong = store[uw], store[us]
        out.append(TrainingExample(weak, strong, record.attribute, 1, record.origin))
        if swap_augment:
            out.append(TrainingExample(strong, weak, record.attribute, 0, record.origin))
    return out


def expand_to_utterance_pairs(records, store, per_pair=4, swap_augment=True, seed=0):
    """Sample up to `per_pair` utterance combinations per record.

    With swap_augment each sampled combination also yields the reversed pair
    with label 0, so the output is label balanced. Deterministic given seed.
    """
    spk_index = speakers_index(store)
    rng = np.random.Generator(np.random.PCG64(seed))
    examples = []
    for record in records:
        combos = _combos(record, spk_index)
        if len(combos) > per_pair:
            picked = rng.choice(len(combos), size=per_pair, replace=False)
            combos = [combos[i] for i in picked]
        examples.extend(_emit(store, record, combos, swap_augment))
    return examples


def build_split(records, store, sections, per_pair=4, swap_augment=True, seed=0,
                val_per_pair=1, seen_per_pair=1):
    """Deterministically derive a CorpusSplit from records + store + speaker sections.

    Train examples come from records whose both speakers are in [train]
    (annotated and mined); validation and test_seen reuse those speakers but
    draw utterance combinations disjoint from the train draw, and use
    annotated records only. test_unseen uses annotated records among the
    held-out speakers. All sets are label balanced when swap_augment is on.
    """
    spk_index = speakers_index(store)
    train_spk = set(sections["train"])
    unseen_spk = set(sections["test_unseen"])
    rng = np.random.Generator(np.random.PCG64(seed))

    train, validation, test_seen, test_unseen = [], [], [], []
    for record in records:
        in_train = record.weaker in train_spk and record.stronger in train_spk
        in_unseen = record.weaker in unseen_spk and record.stronger in unseen_spk
        if not in_train and not in_unseen:
            continue
        combos = _combos(record, spk_index)
        order = rng.permutation(len(combos))
        combos = [combos[i] for i in order]
        if in_unseen:
            if record.origin == ORIGIN_ANNOTATED:
                test_unseen.extend(_emit(store, record, combos[:per_pair], swap_augment))
            continue
        n_train = min(per_pair, len(combos))
        train.extend(_emit(store, record, combos[:n_train], swap_augment))
        if record.origin == ORIGIN_ANNOTATED:
            rest = combos[n_train:]
            validation.extend(_emit(store, record, rest[:val_per_pair], swap_augment))
            test_seen.extend(_emit(store, record, rest[val_per_pair:val_per_pair + seen_per_pair],
                                   swap_augment))
    return CorpusSplit(train, validation, test_seen, test_unseen)
