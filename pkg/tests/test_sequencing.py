import json
import random
import string

import pytest

from relex.corpus import Span
from relex.indicator import extract_indicator
from relex.sequencing import (
    CLS,
    DOLLAR,
    E11,
    E12,
    E21,
    E22,
    HASH,
    PAD,
    RESERVED_TOKENS,
    SEP,
    UNK,
    AggregateSequence,
    EncodedExample,
    SequenceLengthError,
    Vocabulary,
    VocabularyError,
    assemble,
    assemble_for_mode,
    assemble_indicator_only,
    assemble_sentence_only,
    example_from_record,
    example_to_record,
    insert_entity_markers,
    insert_indicator_markers,
    read_dataset,
    vocabulary_from_instances,
    wordpiece_tokenize,
    write_dataset,
)
from relex.synthetic import synthetic_annotated

from conftest import build_instance


@pytest.fixture
def small_vocab():
    return Vocabulary.build(
        ["un", "##afford", "##able", "moved", "boss", "my", "new", "into",
         "his", "office", "yesterday", ".", "shock", "caused", "by", "attack"]
    )


class TestVocabulary:
    def test_reserved_required(self):
        with pytest.raises(VocabularyError):
            Vocabulary(["just", "words"])

    def test_duplicate_rejected(self):
        with pytest.raises(VocabularyError):
            Vocabulary(list(RESERVED_TOKENS) + ["x", "x"])

    def test_file_round_trip(self, small_vocab, tmp_path):
        path = tmp_path / "vocab.txt"
        small_vocab.save(path)
        loaded = Vocabulary.from_file(path)
        assert loaded.tokens == small_vocab.tokens
        assert loaded.sha256 == small_vocab.sha256

    def test_ids_are_line_numbers(self, small_vocab, tmp_path):
        path = tmp_path / "vocab.txt"
        small_vocab.save(path)
        lines = path.read_text().splitlines()
        for i, token in enumerate(lines):
            assert small_vocab.id(token) == i


class TestWordPiece:
    def test_whole_word(self, small_vocab):
        assert wordpiece_tokenize(["moved"], small_vocab) == ["moved"]

    def test_greedy_split(self, small_vocab):
        assert wordpiece_tokenize(["unaffordable"], small_vocab) == [
            "un", "##afford", "##able",
        ]

    def test_reserved_unsplit(self, small_vocab):
        assert wordpiece_tokenize(["e11"], small_vocab) == ["e11"]

    def test_unknown_word(self, small_vocab):
        assert wordpiece_tokenize(["zzz"], small_vocab) == [UNK]

    def test_empty_input(self, small_vocab):
        assert wordpiece_tokenize([], small_vocab) == []

    def test_against_reference_implementation(self, tmp_path):
        transformers = pytest.importorskip("transformers")
        rng = random.Random(99)
        alphabet = "abc"
        pieces = {"".join(p) for p in
                  [rng.choices(alphabet, k=rng.randint(1, 3)) for _ in range(40)]}
        vocab_tokens = list(RESERVED_TOKENS) + sorted(
            pieces | {"##" + p for p in rng.sample(sorted(pieces), 20)}
        )
        vocab = Vocabulary(vocab_tokens)
        vocab_path = tmp_path / "vocab.txt"
        vocab.save(vocab_path)
        reference = transformers.BertTokenizer(str(vocab_path), do_lower_case=False)
        for _ in range(300):
            word = "".join(rng.choices(alphabet, k=rng.randint(1, 12)))
            ours = wordpiece_tokenize([word], vocab)
            theirs = reference.tokenize(word)
            assert ours == theirs, f"{word}: {ours} != {theirs}"


class TestMarkers:
    def test_entity_markers_published_layout(self, fig1_instance):
        assert " ".join(insert_entity_markers(fig1_instance)) == (
            "my new e11 boss e12 moved into his e21 office e22 yesterday ."
        )

    def test_multi_token_entity_edges_only(self):
        instance = build_instance(
            "A <e1>fruit tree</e1> near the <e2>house</e2> .",
            "Other",
            "DT NN NN IN DT NN .",
        )
        tokens = insert_entity_markers(instance)
        assert tokens == ["a", "e11", "fruit", "tree", "e12", "near", "the",
                          "e21", "house", "e22", "."]

    def test_indicator_markers(self, fig_trio):
        instance, _ = fig_trio[0]
        indicator = extract_indicator(instance)
        assert " ".join(insert_indicator_markers(indicator)) == (
            "shock # caused by $ attack"
        )

    def test_indicator_markers_analyzer(self, fig_trio):
        instance, _ = fig_trio[2]
        indicator = extract_indicator(instance)
        assert " ".join(insert_indicator_markers(indicator)) == (
            "analyzer # using $ method"
        )

    def test_adjacent_entities_empty_interior(self):
        instance = build_instance(
            "The <e1>cat</e1> <e2>mat</e2> .", "Other", "DT NN NN ."
        )
        indicator = extract_indicator(instance)
        assert insert_indicator_markers(indicator) == ["cat", "#", "$", "mat"]


def _assemble_fig1(fig1_instance, max_len=64):
    vocab = vocabulary_from_instances([fig1_instance])
    indicator = extract_indicator(fig1_instance)
    sentence = insert_entity_markers(fig1_instance)
    marked = insert_indicator_markers(indicator)
    return vocab, assemble(sentence, marked, vocab, max_len, instance_id=1)


class TestAssemble:
    def test_layout_and_mask(self, fig1_instance):
        vocab, seq = _assemble_fig1(fig1_instance)
        assert len(seq.ids) == 64
        assert vocab.token(seq.ids[0]) == CLS
        true_len = seq.length
        assert all(m == 1 for m in seq.attention_mask[:true_len])
        assert all(m == 0 for m in seq.attention_mask[true_len:])
        assert all(i == vocab.pad_id for i in seq.ids[true_len:])
        seps = [i for i, t in enumerate(seq.ids) if vocab.token(t) == SEP]
        assert len(seps) == 2 and seps[1] == true_len - 1

    def test_marker_indices_decode(self, fig1_instance):
        vocab, seq = _assemble_fig1(fig1_instance)
        decoded = [vocab.token(seq.ids[i]) for i in (seq.m, seq.n, seq.p, seq.q)]
        assert decoded == [E11, E12, E21, E22]
        assert seq.m < seq.n < seq.p < seq.q

    def test_entity_spans_exclusive_of_markers(self, fig1_instance):
        vocab, seq = _assemble_fig1(fig1_instance)
        e1 = [vocab.token(seq.ids[i]) for i in range(*seq.e1_span)]
        e2 = [vocab.token(seq.ids[i]) for i in range(*seq.e2_span)]
        assert e1 == ["boss"] and e2 == ["office"]

    def test_indicator_span_and_markers(self, fig1_instance):
        vocab, seq = _assemble_fig1(fig1_instance)
        span_tokens = [vocab.token(seq.ids[i]) for i in range(*seq.indicator_span)]
        assert span_tokens == ["boss", "#", "moved", "into", "$", "office"]
        assert vocab.token(seq.ids[seq.hash_index]) == HASH
        assert vocab.token(seq.ids[seq.dollar_index]) == DOLLAR
        assert seq.indicator_span.start > seq.ids.index(vocab.sep_id)

    def test_segments(self, fig1_instance):
        vocab, seq = _assemble_fig1(fig1_instance)
        first_sep = seq.ids.index(vocab.sep_id)
        assert all(s == 0 for s in seq.segment_ids[: first_sep + 1])
        assert all(s == 1 for s in seq.segment_ids[first_sep + 1 : seq.length])

    def test_deterministic(self, fig1_instance):
        _, seq1 = _assemble_fig1(fig1_instance)
        _, seq2 = _assemble_fig1(fig1_instance)
        assert seq1 == seq2

    def test_truncation_preserves_markers_and_indicator(self):
        filler = " ".join(f"pad{i}" for i in range(150))
        instance = build_instance(
            f"The <e1>boss</e1> moved into the <e2>office</e2> with {filler} .",
            "Entity-Destination(e1,e2)",
            "DT NN VBD IN DT NN IN " + " ".join(["NN"] * 150) + " .",
        )
        vocab = vocabulary_from_instances([instance])
        indicator = extract_indicator(instance)
        sentence = insert_entity_markers(instance)
        marked = insert_indicator_markers(indicator)
        full = assemble(sentence, marked, vocab, 512, instance_id=9)
        seq = assemble(sentence, marked, vocab, 128, instance_id=9)
        assert seq.length == 128
        decoded = [vocab.token(seq.ids[i]) for i in (seq.m, seq.n, seq.p, seq.q)]
        assert decoded == [E11, E12, E21, E22]
        ours = [vocab.token(seq.ids[i]) for i in range(*seq.indicator_span)]
        theirs = [vocab.token(full.ids[i]) for i in range(*full.indicator_span)]
        assert ours == theirs  # indicator intact
        # dropped subwords come from the sentence tail, keeps are a prefix
        sent_tokens = [vocab.token(seq.ids[i]) for i in range(1, seq.indicator_span.start - 1)]
        full_sent = [vocab.token(full.ids[i]) for i in range(1, full.indicator_span.start - 1)]
        assert sent_tokens == full_sent[: len(sent_tokens)]

    def test_unfittable_raises_with_id(self, fig1_instance):
        vocab = vocabulary_from_instances([fig1_instance])
        indicator = extract_indicator(fig1_instance)
        sentence = insert_entity_markers(fig1_instance)
        marked = insert_indicator_markers(indicator)
        with pytest.raises(SequenceLengthError) as err:
            assemble(sentence, marked, vocab, 10, instance_id=41)
        assert "41" in str(err.value)

    def test_sentence_only(self, fig1_instance):
        vocab = vocabulary_from_instances([fig1_instance])
        sentence = insert_entity_markers(fig1_instance)
        seq = assemble_sentence_only(sentence, vocab, 32)
        assert seq.indicator_span is None
        decoded = [vocab.token(seq.ids[i]) for i in (seq.m, seq.n, seq.p, seq.q)]
        assert decoded == [E11, E12, E21, E22]

    def test_indicator_only(self, fig1_instance):
        vocab = vocabulary_from_instances([fig1_instance])
        indicator = extract_indicator(fig1_instance)
        marked = insert_indicator_markers(indicator)
        seq = assemble_indicator_only(marked, vocab, 32)
        assert seq.m is None
        e1 = [vocab.token(seq.ids[i]) for i in range(*seq.e1_span)]
        e2 = [vocab.token(seq.ids[i]) for i in range(*seq.e2_span)]
        assert e1 == ["boss"] and e2 == ["office"]

    def test_no_truncation_on_synthetic_corpus(self):
        instances = synthetic_annotated(n=100, seed=5)
        vocab = vocabulary_from_instances(instances)
        for instance in instances:
            indicator = extract_indicator(instance)
            seq = assemble_for_mode("both", instance, indicator, vocab, 128)
            # layout: every subword fits without truncation at max_len 128
            sentence = insert_entity_markers(instance)
            assert seq.length == len(wordpiece_tokenize(sentence, vocab)) + len(
                wordpiece_tokenize(insert_indicator_markers(indicator), vocab)
            ) + 3


class TestDatasetRecords:
    def test_record_round_trip(self, fig1_instance):
        vocab, seq = _assemble_fig1(fig1_instance)
        example = EncodedExample(1, seq, fig1_instance.raw.label.id)
        assert example_from_record(example_to_record(example)) == example

    def test_jsonl_file_round_trip(self, fig1_instance, tmp_path):
        vocab, seq = _assemble_fig1(fig1_instance)
        examples = [EncodedExample(i, seq, 3) for i in range(4)]
        path = tmp_path / "data.jsonl"
        write_dataset(examples, path)
        assert read_dataset(path) == examples
        first = json.loads(path.read_text().splitlines()[0])
        assert {"id", "ids", "mask", "label"} <= set(first)
