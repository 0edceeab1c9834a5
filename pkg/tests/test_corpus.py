"""File formats, synthetic corpus, and utterance-pair expansion."""

import numpy as np
import pytest

from qvtad import corpus
from qvtad.errors import (
    ConfigError,
    EmptyCorpusError,
    FormatError,
    StoreError,
    VocabularyError,
)


@pytest.fixture
def vocab():
    return corpus.AttributeVocab(["Bright", "Thin", "Hoarse"])


@pytest.fixture
def tiny_store():
    rng = np.random.default_rng(0)
    store = {}
    for spk, gender, n in (("p225", "M", 2), ("p226", "M", 3), ("p227", "F", 2)):
        for j in range(n):
            utt = f"{spk}_{j:03d}"
            values = rng.normal(size=8).astype(np.float32).astype(np.float64)
            store[utt] = corpus.EmbeddingVector(values, utt, spk, gender)
    return store


class TestVocab:
    def test_bijection(self, vocab):
        assert vocab.size == 3
        for i, name in enumerate(vocab.names):
            assert vocab.index_of(name) == i
            assert vocab.name_of(i) == name

    def test_duplicates_rejected(self):
        with pytest.raises(VocabularyError):
            corpus.AttributeVocab(["a", "a"])

    def test_unknown_name(self, vocab):
        with pytest.raises(VocabularyError):
            vocab.index_of("Mellow")

    def test_default_has_34_entries(self):
        assert corpus.AttributeVocab.default().size == 34

    def test_file_roundtrip(self, tmp_path, vocab):
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        assert corpus.AttributeVocab.load(path).names == vocab.names


class TestAnnotations:
    def test_single_attribute_line(self, tmp_path, vocab):
        path = tmp_path / "ann.txt"
        path.write_text("p225,p226,Bright\n")
        records = corpus.parse_annotations(path, vocab)
        assert len(records) == 1
        rec = records[0]
        assert (rec.weaker, rec.stronger, rec.attribute) == ("p225", "p226", 0)
        assert rec.origin == corpus.ORIGIN_ANNOTATED and rec.confidence == 1.0

    def test_multi_attribute_line_yields_multiple_records(self, tmp_path, vocab):
        path = tmp_path / "ann.txt"
        path.write_text("p225,p226,Bright|Thin\n")
        records = corpus.parse_annotations(path, vocab)
        assert [(r.attribute) for r in records] == [0, 1]
        assert all((r.weaker, r.stronger) == ("p225", "p226") for r in records)

    def test_comments_and_blank_lines_skipped(self, tmp_path, vocab):
        path = tmp_path / "ann.txt"
        path.write_text("# header\n\np225,p226,Hoarse\n")
        assert len(corpus.parse_annotations(path, vocab)) == 1

    def test_malformed_line_reports_line_number(self, tmp_path, vocab):
        path = tmp_path / "ann.txt"
        path.write_text("p225,p226,Bright\np225p226\n")
        with pytest.raises(FormatError, match=":2:"):
            corpus.parse_annotations(path, vocab)

    def test_unknown_attribute_reports_line_number(self, tmp_path, vocab):
        path = tmp_path / "ann.txt"
        path.write_text("p225,p226,Warm\n")
        with pytest.raises(VocabularyError, match=":1:"):
            corpus.parse_annotations(path, vocab)

    def test_self_comparison_rejected(self, tmp_path, vocab):
        path = tmp_path / "ann.txt"
        path.write_text("p225,p225,Bright\n")
        with pytest.raises(FormatError):
            corpus.parse_annotations(path, vocab)

    def test_too_many_attributes_rejected(self, tmp_path, vocab):
        path = tmp_path / "ann.txt"
        path.write_text("p225,p226,Bright|Thin|Hoarse|Bright\n")
        with pytest.raises(FormatError):
            corpus.parse_annotations(path, vocab)

    def test_extended_format_roundtrip(self, tmp_path, vocab):
        records = [
            corpus.ComparisonRecord("a", "b", 0),
            corpus.ComparisonRecord("b", "c", 2, corpus.ORIGIN_MINED, 0.5),
        ]
        path = tmp_path / "aug.txt"
        corpus.write_annotations(path, records, vocab, with_origin=True)
        back = corpus.parse_annotations(path, vocab)
        assert back == records


class TestStore:
    def test_roundtrip_bit_exact(self, tmp_path, tiny_store):
        manifest = tmp_path / "store.tsv"
        corpus.write_embedding_store(manifest, tiny_store)
        loaded = corpus.load_embedding_store(manifest)
        assert set(loaded) == set(tiny_store)
        for utt, vec in tiny_store.items():
            got = loaded[utt]
            np.testing.assert_array_equal(got.values, vec.values)
            assert (got.speaker_id, got.gender) == (vec.speaker_id, vec.gender)
        # writing the loaded store again reproduces identical bytes
        manifest2 = tmp_path / "store2.tsv"
        corpus.write_embedding_store(manifest2, loaded, blob_name="store.blob")
        assert (tmp_path / "store.blob").read_bytes() == (tmp_path / "store.blob").read_bytes()
        assert manifest.read_text().replace("store.tsv", "x") \
            == manifest2.read_text().replace("store2.tsv", "x")

    def test_truncated_blob_detected(self, tmp_path, tiny_store):
        manifest = tmp_path / "store.tsv"
        corpus.write_embedding_store(manifest, tiny_store)
        blob = tmp_path / "store.blob"
        blob.write_bytes(blob.read_bytes()[:-5])
        with pytest.raises(StoreError, match="past the blob end"):
            corpus.load_embedding_store(manifest)

    def test_non_finite_value_detected(self, tmp_path, tiny_store):
        manifest = tmp_path / "store.tsv"
        corpus.write_embedding_store(manifest, tiny_store)
        blob = tmp_path / "store.blob"
        raw = bytearray(blob.read_bytes())
        raw[0:4] = np.array([np.inf], dtype="<f4").tobytes()
        blob.write_bytes(bytes(raw))
        with pytest.raises(StoreError, match="non-finite"):
            corpus.load_embedding_store(manifest)

    def test_duplicate_utterance_detected(self, tmp_path, tiny_store):
        manifest = tmp_path / "store.tsv"
        corpus.write_embedding_store(manifest, tiny_store)
        lines = manifest.read_text().splitlines()
        lines.append(lines[-1])
        manifest.write_text("\n".join(lines) + "\n")
        with pytest.raises(StoreError, match="duplicate"):
            corpus.load_embedding_store(manifest)

    def test_row_dim_mismatch_detected(self, tmp_path, tiny_store):
        manifest = tmp_path / "store.tsv"
        corpus.write_embedding_store(manifest, tiny_store)
        text = manifest.read_text().splitlines()
        text[-1] = text[-1].rsplit("\t", 1)[0] + "\t9"
        manifest.write_text("\n".join(text) + "\n")
        with pytest.raises(StoreError, match="dim"):
            corpus.load_embedding_store(manifest)


class TestSplitFile:
    def test_roundtrip(self, tmp_path):
        sections = {"train": ["a", "b"], "validation": ["a", "b"],
                    "test_seen": ["a", "b"], "test_unseen": ["c"]}
        path = tmp_path / "split.txt"
        corpus.write_split_file(path, sections)
        assert corpus.parse_split_file(path) == sections

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "split.txt"
        path.write_text("[bogus]\na\n")
        with pytest.raises(FormatError):
            corpus.parse_split_file(path)


class TestExpand:
    def _record(self):
        return corpus.ComparisonRecord("p225", "p226", 0)

    def test_full_enumeration_when_per_pair_covers(self, tiny_store):
        examples = corpus.expand_to_utterance_pairs(
            [self._record()], tiny_store, per_pair=6, swap_augment=False, seed=0)
        assert len(examples) == 6  # 2 x 3 utterance combinations
        assert all(ex.label == 1 for ex in examples)
        assert all(ex.emb_a.speaker_id == "p225" and ex.emb_b.speaker_id == "p226"
                   for ex in examples)

    def test_swap_doubles_and_balances(self, tiny_store):
        examples = corpus.expand_to_utterance_pairs(
            [self._record()], tiny_store, per_pair=6, swap_augment=True, seed=0)
        assert len(examples) == 12
        assert sum(1 for ex in examples if ex.label == 0) == 6

    def test_per_pair_one_is_deterministic(self, tiny_store):
        runs = [corpus.expand_to_utterance_pairs(
            [self._record()], tiny_store, per_pair=1, swap_augment=False, seed=42)
            for _ in range(3)]
        combos = [(r[0].emb_a.utterance_id, r[0].emb_b.utterance_id) for r in runs]
        assert len(set(combos)) == 1

    def test_missing_speaker_raises(self, tiny_store):
        with pytest.raises(StoreError, match="p999"):
            corpus.expand_to_utterance_pairs(
                [corpus.ComparisonRecord("p999", "p226", 0)], tiny_store)

    def test_same_gender_enforced(self, tiny_store):
        with pytest.raises(ConfigError):
            corpus.expand_to_utterance_pairs(
                [corpus.ComparisonRecord("p225", "p227", 0)], tiny_store)


class TestSynthCorpus:
    def test_deterministic_given_seed(self):
        a = corpus.synth_corpus(n_speakers=8, seed=5)
        b = corpus.synth_corpus(n_speakers=8, seed=5)
        assert a.records == b.records
        assert a.sections == b.sections
        for utt in a.store:
            np.testing.assert_array_equal(a.store[utt].values, b.store[utt].values)
        for ex_a, ex_b in zip(a.split.train, b.split.train):
            assert ex_a.emb_a.utterance_id == ex_b.emb_a.utterance_id
            assert ex_a.label == ex_b.label

    def test_noise_free_records_match_latent_ordering(self):
        sc = corpus.synth_corpus(n_speakers=10, margin=0.2, noise=0.0, seed=1)
        idx = {spk: i for i, spk in enumerate(sc.speakers)}
        for rec in sc.records:
            diff = sc.latent[idx[rec.stronger], rec.attribute] \
                - sc.latent[idx[rec.weaker], rec.attribute]
            assert diff > 0.2

    def test_unseen_disjoint_from_train(self):
        sc = corpus.synth_corpus(n_speakers=12, utt_per_speaker=3, k=4, seed=3)
        train_speakers = corpus.speakers_of(sc.split.train)
        unseen_speakers = corpus.speakers_of(sc.split.test_unseen)
        assert not (train_speakers & unseen_speakers)

    def test_all_examples_same_gender(self):
        sc = corpus.synth_corpus(n_speakers=12, seed=4)
        for part in (sc.split.train, sc.split.validation,
                     sc.split.test_seen, sc.split.test_unseen):
            for ex in part:
                assert ex.emb_a.gender == ex.emb_b.gender

    def test_swap_balance_in_train(self):
        sc = corpus.synth_corpus(n_speakers=12, seed=6)
        labels = [ex.label for ex in sc.split.train]
        assert labels.count(0) == labels.count(1)

    def test_impossible_margin_raises(self):
        with pytest.raises(EmptyCorpusError):
            corpus.synth_corpus(n_speakers=8, margin=0.999, seed=0)

    def test_store_roundtrips_through_files(self, tmp_path):
        sc = corpus.synth_corpus(n_speakers=8, seed=7)
        manifest = tmp_path / "store.tsv"
        corpus.write_embedding_store(manifest, sc.store)
        loaded = corpus.load_embedding_store(manifest)
        for utt, vec in sc.store.items():
            np.testing.assert_array_equal(loaded[utt].values, vec.values)

    def test_learnability_fixture_shape(self):
        fx = corpus.learnability_fixture()
        assert len({v.speaker_id for v in fx.store.values()}) == 12
        assert fx.vocab.size == 4
        assert fx.split.test_unseen and fx.split.validation

    def test_long_tail_fixture_tail_share(self):
        lt = corpus.long_tail_corpus(seed=0)
        counts = {}
        for r in lt.records:
            counts[r.attribute] = counts.get(r.attribute, 0) + 1
        total = sum(counts.values())
        for tail_attr in (6, 7):
            assert counts[tail_attr] / total < 0.05
