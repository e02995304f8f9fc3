"""SemEval-2010 Task 8 corpus parsing and token-annotation alignment.

The distribution format is four lines per record:

    <id><TAB>"<sentence with <e1>..</e1> and <e2>..</e2> inline tags>"
    <relation label>
    Comment: <optional free text>
    <blank line>

Token annotations (POS/NER) come from an external tagger run over the same
whitespace-plus-punctuation tokenization this module produces; see
``tokenize_text``. Annotation files hold one block per instance, blocks
separated by blank lines, one ``<surface><TAB><POS><TAB><NER>`` line per
token.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, NamedTuple, Sequence

RELATIONS = (
    "Cause-Effect",
    "Component-Whole",
    "Content-Container",
    "Entity-Destination",
    "Entity-Origin",
    "Instrument-Agency",
    "Member-Collection",
    "Message-Topic",
    "Product-Producer",
)

OTHER = "Other"


class Direction(Enum):
    E1_TO_E2 = "e1,e2"
    E2_TO_E1 = "e2,e1"
    NONE = "none"


class CorpusError(Exception):
    """Base for corpus-level failures."""


class ParseError(CorpusError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class AlignmentError(CorpusError):
    """Annotation blocks do not line up with parsed instances."""


@dataclass(frozen=True)
class RelationLabel:
    relation: str
    direction: Direction

    def __post_init__(self):
        if self.relation == OTHER:
            if self.direction is not Direction.NONE:
                raise ValueError("Other carries no direction")
        elif self.relation in RELATIONS:
            if self.direction is Direction.NONE:
                raise ValueError(f"{self.relation} requires a direction")
        else:
            raise ValueError(f"unknown relation name: {self.relation!r}")

    def __str__(self) -> str:
        if self.relation == OTHER:
            return OTHER
        return f"{self.relation}({self.direction.value})"

    @property
    def id(self) -> int:
        return LABEL_TO_ID[str(self)]

    @classmethod
    def from_id(cls, label_id: int) -> "RelationLabel":
        return parse_label(LABELS[label_id])


def _build_label_inventory() -> tuple[str, ...]:
    names = []
    for rel in RELATIONS:
        names.append(f"{rel}({Direction.E1_TO_E2.value})")
        names.append(f"{rel}({Direction.E2_TO_E1.value})")
    names.append(OTHER)
    return tuple(names)


#: 19 label strings; the 9 relations in alphabetical order, each with
#: direction (e1,e2) then (e2,e1), and Other last.
LABELS = _build_label_inventory()
LABEL_TO_ID = {name: i for i, name in enumerate(LABELS)}
N_LABELS = len(LABELS)
OTHER_ID = LABEL_TO_ID[OTHER]

_LABEL_RE = re.compile(r"^([A-Za-z]+-[A-Za-z]+)\((e1,e2|e2,e1)\)$")


def parse_label(text: str) -> RelationLabel:
    """Parse a label string such as ``Cause-Effect(e2,e1)`` or ``Other``."""
    text = text.strip()
    if text == OTHER:
        return RelationLabel(OTHER, Direction.NONE)
    match = _LABEL_RE.match(text)
    if match is None:
        raise ParseError(f"malformed relation label: {text!r}")
    name, direction = match.groups()
    if name not in RELATIONS:
        raise ParseError(f"unknown relation name: {name!r}")
    return RelationLabel(name, Direction(direction))


class Span(NamedTuple):
    """Half-open token index range [start, stop)."""

    start: int
    stop: int

    def __len__(self) -> int:
        return self.stop - self.start

    def __contains__(self, index: object) -> bool:
        return isinstance(index, int) and self.start <= index < self.stop


_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize_text(text: str) -> list[str]:
    """Whitespace-plus-punctuation tokenization; punctuation marks become
    their own tokens. Annotations must be produced over this tokenization."""
    return _TOKEN_RE.findall(text)


def _token_offsets(text: str) -> list[tuple[int, int]]:
    return [match.span() for match in _TOKEN_RE.finditer(text)]


@dataclass(frozen=True)
class RawInstance:
    id: int
    text: str  # sentence with inline entity tags, exactly as distributed
    tokens: tuple[str, ...]  # tag-stripped tokenization of text
    e1_span: Span
    e2_span: Span
    label: RelationLabel
    comment: str = ""

    @property
    def clean_text(self) -> str:
        return strip_entity_tags(self.text)[0]

    @property
    def e1_tokens(self) -> tuple[str, ...]:
        return self.tokens[self.e1_span.start : self.e1_span.stop]

    @property
    def e2_tokens(self) -> tuple[str, ...]:
        return self.tokens[self.e2_span.start : self.e2_span.stop]


@dataclass(frozen=True)
class AnnotatedToken:
    surface: str
    pos: str
    ner: str
    index: int


@dataclass(frozen=True)
class AnnotatedInstance:
    raw: RawInstance
    tokens: tuple[AnnotatedToken, ...]

    @property
    def e1_head_index(self) -> int:
        return self.raw.e1_span.stop - 1

    @property
    def e2_head_index(self) -> int:
        return self.raw.e2_span.stop - 1


_TAGS = ("<e1>", "</e1>", "<e2>", "</e2>")


def strip_entity_tags(tagged: str) -> tuple[str, tuple[int, int], tuple[int, int]]:
    """Remove the four entity tags, returning the clean sentence and the
    character ranges the two entities occupy in it.

    Raises ParseError when a tag is missing, duplicated, or out of order.
    """
    positions = []
    for tag in _TAGS:
        first = tagged.find(tag)
        if first < 0:
            raise ParseError(f"missing entity tag {tag}")
        if tagged.find(tag, first + len(tag)) >= 0:
            raise ParseError(f"duplicated entity tag {tag}")
        positions.append(first)
    if positions != sorted(positions):
        raise ParseError("entity tags out of order (expected <e1>..</e1> before <e2>..</e2>)")

    clean = []
    cursor = 0
    removed = 0
    marks = []
    for tag, pos in zip(_TAGS, positions):
        clean.append(tagged[cursor:pos])
        marks.append(pos - removed)
        cursor = pos + len(tag)
        removed += len(tag)
    clean.append(tagged[cursor:])
    text = "".join(clean)
    return text, (marks[0], marks[1]), (marks[2], marks[3])


def _char_range_to_token_span(offsets: Sequence[tuple[int, int]], char_range: tuple[int, int]) -> Span:
    lo, hi = char_range
    hits = [i for i, (s, e) in enumerate(offsets) if s < hi and e > lo]
    if not hits:
        raise ParseError("entity span contains no tokens")
    if hits != list(range(hits[0], hits[-1] + 1)):
        raise ParseError("entity span is not a contiguous token range")
    return Span(hits[0], hits[-1] + 1)


def parse_instance_lines(lines: Sequence[str], first_line_no: int = 1) -> RawInstance:
    """Parse one 4-line record (the trailing blank line excluded)."""
    if len(lines) < 2:
        raise ParseError("incomplete record", first_line_no)
    header = lines[0]
    if "\t" not in header:
        raise ParseError("expected <id><TAB>\"<sentence>\"", first_line_no)
    id_part, _, sentence_part = header.partition("\t")
    try:
        instance_id = int(id_part)
    except ValueError:
        raise ParseError(f"bad instance id {id_part!r}", first_line_no) from None
    if instance_id <= 0:
        raise ParseError(f"instance id must be positive, got {instance_id}", first_line_no)
    if len(sentence_part) < 2 or not (sentence_part.startswith('"') and sentence_part.endswith('"')):
        raise ParseError("sentence is not double-quoted", first_line_no)
    tagged = sentence_part[1:-1]

    try:
        clean, e1_chars, e2_chars = strip_entity_tags(tagged)
        offsets = _token_offsets(clean)
        e1_span = _char_range_to_token_span(offsets, e1_chars)
        e2_span = _char_range_to_token_span(offsets, e2_chars)
    except ParseError as err:
        raise ParseError(str(err), first_line_no) from None

    if len(e1_span) < 1 or len(e2_span) < 1:
        raise ParseError("empty entity span", first_line_no)
    if e1_span.stop > e2_span.start:
        raise ParseError("e1 must end strictly before e2 begins", first_line_no)

    try:
        label = parse_label(lines[1])
    except ParseError as err:
        raise ParseError(str(err), first_line_no + 1) from None

    comment = ""
    if len(lines) >= 3:
        if not lines[2].startswith("Comment:"):
            raise ParseError("expected 'Comment:' prefix", first_line_no + 2)
        comment = lines[2][len("Comment:"):]

    tokens = tuple(tokenize_text(clean))
    return RawInstance(
        id=instance_id,
        text=tagged,
        tokens=tokens,
        e1_span=e1_span,
        e2_span=e2_span,
        label=label,
        comment=comment,
    )


def _iter_records(lines: Iterable[str]) -> Iterator[tuple[int, list[str]]]:
    record: list[str] = []
    start = 1
    for line_no, line in enumerate(lines, start=1):
        stripped = line.rstrip("\n")
        if stripped.strip() == "":
            if record:
                yield start, record
                record = []
            continue
        if not record:
            start = line_no
        record.append(stripped)
    if record:
        yield start, record


def parse_semeval_lines(lines: Iterable[str]) -> list[RawInstance]:
    instances = []
    for start, record in _iter_records(lines):
        if len(record) > 3:
            raise ParseError("record has more than 3 non-blank lines", start)
        instances.append(parse_instance_lines(record, start))
    return instances


def parse_semeval_file(path) -> list[RawInstance]:
    """Parse a SemEval-2010 Task 8 distribution file into raw instances."""
    with open(path, encoding="utf-8") as handle:
        return parse_semeval_lines(handle)


def serialize_instance(instance: RawInstance) -> str:
    """Render an instance back to the 4-line distribution format."""
    return (
        f'{instance.id}\t"{instance.text}"\n'
        f"{instance.label}\n"
        f"Comment:{instance.comment}\n"
        "\n"
    )


def parse_annotation_blocks(lines: Iterable[str]) -> list[list[tuple[str, str, str]]]:
    blocks: list[list[tuple[str, str, str]]] = []
    block: list[tuple[str, str, str]] = []
    for line_no, line in enumerate(lines, start=1):
        stripped = line.rstrip("\n")
        if stripped.strip() == "":
            if block:
                blocks.append(block)
                block = []
            continue
        fields = stripped.split("\t")
        if len(fields) != 3:
            raise ParseError(
                f"expected <surface><TAB><POS><TAB><NER>, got {len(fields)} fields", line_no
            )
        block.append((fields[0], fields[1], fields[2]))
    if block:
        blocks.append(block)
    return blocks


def parse_annotation_file(path) -> list[list[tuple[str, str, str]]]:
    with open(path, encoding="utf-8") as handle:
        return parse_annotation_blocks(handle)


def attach_annotations(
    instances: Sequence[RawInstance],
    blocks: Sequence[list[tuple[str, str, str]]],
) -> list[AnnotatedInstance]:
    """Pair each instance with its annotation block, in order.

    A token-count mismatch is an alignment error, never a silent skip.
    """
    if len(blocks) != len(instances):
        raise AlignmentError(
            f"{len(instances)} instances but {len(blocks)} annotation blocks"
        )
    annotated = []
    for instance, block in zip(instances, blocks):
        if len(block) != len(instance.tokens):
            raise AlignmentError(
                f"instance {instance.id}: {len(instance.tokens)} tokens "
                f"but {len(block)} annotation lines"
            )
        tokens = tuple(
            AnnotatedToken(surface=surface, pos=pos, ner=ner, index=i)
            for i, (surface, pos, ner) in enumerate(block)
        )
        annotated.append(AnnotatedInstance(raw=instance, tokens=tokens))
    return annotated


def attach_annotation_file(instances: Sequence[RawInstance], path) -> list[AnnotatedInstance]:
    return attach_annotations(instances, parse_annotation_file(path))
