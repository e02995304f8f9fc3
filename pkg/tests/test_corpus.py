import random

import pytest

from relex.corpus import (
    LABELS,
    OTHER_ID,
    AlignmentError,
    Direction,
    ParseError,
    RelationLabel,
    Span,
    attach_annotations,
    parse_annotation_blocks,
    parse_label,
    parse_semeval_lines,
    serialize_instance,
    tokenize_text,
)

from conftest import random_annotated_instance

# First record of the official training distribution.
FIRST_TRAIN_RECORD = (
    '1\t"The system as described above has its greatest application in an '
    'arrayed <e1>configuration</e1> of antenna <e2>elements</e2>."\n'
    "Component-Whole(e2,e1)\n"
    'Comment:\n'
    "\n"
)

MINI_CORPUS = FIRST_TRAIN_RECORD + (
    '2\t"The <e1>child</e1> was carefully wrapped into the <e2>cradle</e2> ."\n'
    "Other\n"
    "Comment: direction unclear\n"
    "\n"
    '3\t"The <e1>author</e1> of a keygen uses a <e2>disassembler</e2> ."\n'
    "Instrument-Agency(e2,e1)\n"
    "Comment:\n"
    "\n"
)


class TestParseLabel:
    def test_directed(self):
        label = parse_label("Entity-Destination(e1,e2)")
        assert label == RelationLabel("Entity-Destination", Direction.E1_TO_E2)

    def test_other(self):
        assert parse_label("Other") == RelationLabel("Other", Direction.NONE)

    def test_reversed(self):
        label = parse_label("Cause-Effect(e2,e1)")
        assert label.relation == "Cause-Effect"
        assert label.direction is Direction.E2_TO_E1

    @pytest.mark.parametrize(
        "text",
        ["Cause-Affect(e1,e2)", "Other(e1,e2)", "Cause-Effect(e3,e1)",
         "Cause-Effect", "cause-effect(e1,e2)"],
    )
    def test_rejects_malformed(self, text):
        with pytest.raises(ParseError):
            parse_label(text)

    def test_inventory(self):
        assert len(LABELS) == 19
        assert LABELS[OTHER_ID] == "Other"
        assert len(set(LABELS)) == 19

    def test_label_id_round_trip(self):
        for i in range(len(LABELS)):
            assert RelationLabel.from_id(i).id == i


class TestParseFile:
    def test_first_training_record(self):
        (instance,) = parse_semeval_lines(FIRST_TRAIN_RECORD.splitlines())
        assert instance.id == 1
        assert instance.e1_tokens == ("configuration",)
        assert instance.e2_tokens == ("elements",)
        assert instance.label == RelationLabel("Component-Whole", Direction.E2_TO_E1)

    def test_other_record(self):
        instances = parse_semeval_lines(MINI_CORPUS.splitlines())
        assert str(instances[1].label) == "Other"
        assert instances[1].comment == " direction unclear"

    def test_order_and_count(self):
        instances = parse_semeval_lines(MINI_CORPUS.splitlines())
        assert [i.id for i in instances] == [1, 2, 3]

    def test_missing_closing_tag(self):
        bad = '7\t"A <e1>x</e1> near <e2>y ."\nOther\nComment:\n\n'
        with pytest.raises(ParseError) as err:
            parse_semeval_lines(bad.splitlines())
        assert "line 1" in str(err.value)

    def test_missing_quote(self):
        bad = '7\tA <e1>x</e1> near <e2>y</e2> .\nOther\nComment:\n\n'
        with pytest.raises(ParseError):
            parse_semeval_lines(bad.splitlines())

    def test_unknown_label_names_line(self):
        bad = '7\t"A <e1>x</e1> near <e2>y</e2> ."\nNear-Miss(e1,e2)\nComment:\n\n'
        with pytest.raises(ParseError) as err:
            parse_semeval_lines(bad.splitlines())
        assert "line 2" in str(err.value)

    def test_e2_before_e1_rejected(self):
        bad = '7\t"A <e2>x</e2> near <e1>y</e1> ."\nOther\nComment:\n\n'
        with pytest.raises(ParseError):
            parse_semeval_lines(bad.splitlines())

    def test_bad_id(self):
        bad = 'zero\t"A <e1>x</e1> near <e2>y</e2> ."\nOther\nComment:\n\n'
        with pytest.raises(ParseError):
            parse_semeval_lines(bad.splitlines())

    def test_span_invariants(self):
        for instance in parse_semeval_lines(MINI_CORPUS.splitlines()):
            assert len(instance.e1_span) >= 1
            assert instance.e1_span.stop <= instance.e2_span.start


class TestRoundTrip:
    def test_mini_corpus(self):
        instances = parse_semeval_lines(MINI_CORPUS.splitlines())
        text = "".join(serialize_instance(i) for i in instances)
        assert parse_semeval_lines(text.splitlines()) == instances

    def test_randomized(self):
        rng = random.Random(7)
        for trial in range(50):
            instance = random_annotated_instance(rng, inst_id=trial + 1).raw
            reparsed = parse_semeval_lines(serialize_instance(instance).splitlines())
            assert reparsed == [instance]


class TestTokenize:
    def test_punctuation_split(self):
        assert tokenize_text("a high-tech car.") == ["a", "high", "-", "tech", "car", "."]

    def test_idempotent_on_joined(self):
        tokens = tokenize_text("the analyzer 's output , mostly .")
        assert tokenize_text(" ".join(tokens)) == tokens


class TestAttachAnnotations:
    def _blocks(self, instances, per_token=lambda t: (t, "NN", "O")):
        return [[per_token(t) for t in inst.tokens] for inst in instances]

    def test_matching(self):
        instances = parse_semeval_lines(MINI_CORPUS.splitlines())
        annotated = attach_annotations(instances, self._blocks(instances))
        assert len(annotated) == 3
        for inst in annotated:
            assert [t.index for t in inst.tokens] == list(range(len(inst.tokens)))

    def test_token_count_mismatch_names_instance(self):
        instances = parse_semeval_lines(FIRST_TRAIN_RECORD.splitlines())
        blocks = self._blocks(instances)
        blocks[0] = blocks[0][:-1]
        with pytest.raises(AlignmentError) as err:
            attach_annotations(instances, blocks)
        assert "instance 1" in str(err.value)

    def test_empty_annotations(self):
        instances = parse_semeval_lines(FIRST_TRAIN_RECORD.splitlines())
        with pytest.raises(AlignmentError):
            attach_annotations(instances, [])

    def test_block_count_mismatch(self):
        instances = parse_semeval_lines(MINI_CORPUS.splitlines())
        with pytest.raises(AlignmentError):
            attach_annotations(instances, self._blocks(instances)[:2])

    def test_annotation_block_parsing(self):
        text = "The\tDT\tO\ncat\tNN\tO\n\nsat\tVBD\tO\n"
        blocks = parse_annotation_blocks(text.splitlines())
        assert blocks == [[("The", "DT", "O"), ("cat", "NN", "O")], [("sat", "VBD", "O")]]

    def test_annotation_bad_field_count(self):
        with pytest.raises(ParseError):
            parse_annotation_blocks(["The\tDT"])
