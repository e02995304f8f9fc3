"""Subword tokenization, marker insertion, and aggregate-sequence assembly.

The aggregate input layout is

    [CLS] <sentence subwords with e11/e12/e21/e22> [SEP]
          <indicator subwords as  e1 # interior $ e2> [SEP] [PAD]...

with segment ids 0 for the sentence half (including the first [SEP]) and 1
for the indicator half. All marker positions and subword spans are recorded
post-tokenization so the representation heads can find their rows.

Vocabulary files hold one subword per line; the line number is the id.
Preprocessed datasets are emitted as one JSON record per line.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import AnnotatedInstance, Span
from .indicator import IndicatorSequence

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
E11, E12, E21, E22 = "e11", "e12", "e21", "e22"
HASH, DOLLAR = "#", "$"

RESERVED_TOKENS = (PAD, UNK, CLS, SEP, E11, E12, E21, E22, HASH, DOLLAR)

_MAX_WORD_CHARS = 100


class SequencingError(Exception):
    pass


class VocabularyError(SequencingError):
    pass


class SequenceLengthError(SequencingError):
    """Markers + indicator cannot fit within max_len."""


class Vocabulary:
    """Subword-to-id map with the reserved marker tokens."""

    def __init__(self, tokens: Sequence[str]):
        self._tokens = list(tokens)
        self._ids: dict[str, int] = {}
        for i, token in enumerate(self._tokens):
            if token in self._ids:
                raise VocabularyError(f"duplicate vocabulary entry {token!r}")
            self._ids[token] = i
        missing = [t for t in RESERVED_TOKENS if t not in self._ids]
        if missing:
            raise VocabularyError(f"vocabulary lacks reserved tokens: {missing}")

    @classmethod
    def from_file(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as handle:
            return cls([line.rstrip("\n") for line in handle if line.rstrip("\n")])

    @classmethod
    def build(cls, extra_tokens: Iterable[str]) -> "Vocabulary":
        """Reserved tokens first, then the sorted unique extras."""
        extras = sorted(set(extra_tokens) - set(RESERVED_TOKENS))
        return cls(list(RESERVED_TOKENS) + extras)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for token in self._tokens:
                handle.write(token + "\n")

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id(self, token: str) -> int:
        return self._ids[token]

    def token(self, token_id: int) -> str:
        return self._tokens[token_id]

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    @property
    def unk_id(self) -> int:
        return self._ids[UNK]

    @property
    def cls_id(self) -> int:
        return self._ids[CLS]

    @property
    def sep_id(self) -> int:
        return self._ids[SEP]

    @property
    def sha256(self) -> str:
        digest = hashlib.sha256("\n".join(self._tokens).encode("utf-8"))
        return digest.hexdigest()


def vocabulary_from_instances(instances) -> Vocabulary:
    """Whole-word vocabulary covering every lowercased surface (toy runs)."""
    words = {t.surface.lower() for inst in instances for t in inst.tokens}
    return Vocabulary.build(words)


def wordpiece_tokenize(words: Iterable[str], vocab: Vocabulary) -> list[str]:
    """Greedy longest-match-first subword segmentation.

    Words are expected lowercased (uncased pipeline). Reserved tokens pass
    through unsplit; a word with no valid segmentation maps to [UNK].
    """
    pieces: list[str] = []
    for word in words:
        if word in RESERVED_TOKENS:
            pieces.append(word)
            continue
        if len(word) > _MAX_WORD_CHARS:
            pieces.append(UNK)
            continue
        sub: list[str] = []
        start = 0
        while start < len(word):
            end = len(word)
            match = None
            while start < end:
                piece = word[start:end]
                if start > 0:
                    piece = "##" + piece
                if piece in vocab:
                    match = piece
                    break
                end -= 1
            if match is None:
                sub = [UNK]
                break
            sub.append(match)
            start = end
        pieces.extend(sub if sub else [])
    return pieces


def insert_entity_markers(instance: AnnotatedInstance) -> list[str]:
    """Lowercased sentence tokens with e11/e12 around e1 and e21/e22 around
    e2."""
    raw = instance.raw
    words = [t.surface.lower() for t in instance.tokens]
    out: list[str] = []
    for i, word in enumerate(words):
        if i == raw.e1_span.start:
            out.append(E11)
        if i == raw.e2_span.start:
            out.append(E21)
        out.append(word)
        if i == raw.e1_span.stop - 1:
            out.append(E12)
        if i == raw.e2_span.stop - 1:
            out.append(E22)
    return out


def insert_indicator_markers(indicator: IndicatorSequence) -> list[str]:
    """e1 tokens, '#', interior tokens, '$', e2 tokens (all lowercased)."""
    e1 = [t.surface.lower() for t in indicator.e1_tokens]
    interior = [t.surface.lower() for t in indicator.interior_tokens]
    e2 = [t.surface.lower() for t in indicator.e2_tokens]
    return e1 + [HASH] + interior + [DOLLAR] + e2


@dataclass(frozen=True)
class AggregateSequence:
    """Padded, index-tracked model input.

    ``m, n, p, q`` are the positions of e11/e12/e21/e22 (absent in
    indicator-only assemblies). ``e1_span``/``e2_span`` cover the entity
    subwords themselves, exclusive of the marker rows. ``indicator_span``
    covers every indicator-segment subword including the '#' and '$' rows,
    whose positions are tracked separately so heads can exclude them.
    """

    ids: tuple[int, ...]
    attention_mask: tuple[int, ...]
    segment_ids: tuple[int, ...]
    e1_span: Span
    e2_span: Span
    m: int | None = None
    n: int | None = None
    p: int | None = None
    q: int | None = None
    indicator_span: Span | None = None
    hash_index: int | None = None
    dollar_index: int | None = None
    cls_index: int = 0

    def __post_init__(self):
        if len(self.ids) != len(self.attention_mask) or len(self.ids) != len(self.segment_ids):
            raise SequencingError("ids/mask/segment length mismatch")
        markers = (self.m, self.n, self.p, self.q)
        if any(x is not None for x in markers):
            if any(x is None for x in markers):
                raise SequencingError("partial entity-marker indices")
            if not (self.m < self.n < self.p < self.q):
                raise SequencingError("marker indices must satisfy m < n < p < q")
        if len(self.e1_span) < 1 or len(self.e2_span) < 1:
            raise SequencingError("empty entity span")

    @property
    def length(self) -> int:
        return int(sum(self.attention_mask))


def _wordpiece_with_markers(
    words: Sequence[str], markers: Sequence[str], vocab: Vocabulary
) -> tuple[list[str], dict[str, int]]:
    """Tokenize, tracking the subword position of each structural marker.

    Marker occurrences are matched in order, so stray surface duplicates
    later in the word list cannot steal a position.
    """
    pieces: list[str] = []
    positions: dict[str, int] = {}
    pending = list(markers)
    for word in words:
        if pending and word == pending[0]:
            positions[word] = len(pieces)
            pieces.append(word)
            pending.pop(0)
            continue
        pieces.extend(wordpiece_tokenize([word], vocab))
    if pending:
        raise SequencingError(f"marker tokens missing from input: {pending}")
    return pieces, positions


def _truncate_sentence(
    pieces: list[str],
    positions: dict[str, int],
    budget: int,
    instance_id=None,
) -> tuple[list[str], dict[str, int]]:
    """Drop rightmost sentence subwords until the segment fits, never
    dropping the entity markers or the subwords they wrap."""
    protected = set()
    for lo, hi in ((positions[E11], positions[E12]), (positions[E21], positions[E22])):
        protected.update(range(lo, hi + 1))
    keep = list(range(len(pieces)))
    for i in reversed(range(len(pieces))):
        if len(keep) <= budget:
            break
        if i in protected:
            continue
        keep.remove(i)
    if len(keep) > budget:
        raise SequenceLengthError(
            f"instance {instance_id}: markers and indicator exceed max_len"
        )
    remap = {old: new for new, old in enumerate(keep)}
    out_pieces = [pieces[i] for i in keep]
    out_positions = {name: remap[pos] for name, pos in positions.items()}
    return out_pieces, out_positions


def assemble(
    sentence_tokens: Sequence[str],
    indicator_tokens: Sequence[str],
    vocab: Vocabulary,
    max_len: int,
    instance_id=None,
) -> AggregateSequence:
    """Assemble the both-input aggregate sequence.

    The sentence segment is truncated from the right when needed; the four
    entity markers and the whole indicator segment are always retained, and
    assembly fails when they alone exceed ``max_len``.
    """
    sent_pieces, sent_pos = _wordpiece_with_markers(
        sentence_tokens, (E11, E12, E21, E22), vocab
    )
    ind_pieces, ind_pos = _wordpiece_with_markers(indicator_tokens, (HASH, DOLLAR), vocab)

    budget = max_len - 3 - len(ind_pieces)  # [CLS] + two [SEP]
    if budget < 0:
        raise SequenceLengthError(f"instance {instance_id}: indicator exceeds max_len")
    if len(sent_pieces) > budget:
        sent_pieces, sent_pos = _truncate_sentence(sent_pieces, sent_pos, budget, instance_id)

    pieces = [CLS] + sent_pieces + [SEP] + ind_pieces + [SEP]
    sent_offset = 1
    ind_offset = 1 + len(sent_pieces) + 1
    segments = [0] * ind_offset + [1] * (len(ind_pieces) + 1)

    ids = [vocab.id(p) for p in pieces]
    mask = [1] * len(ids)
    ids += [vocab.pad_id] * (max_len - len(ids))
    mask += [0] * (max_len - len(mask))
    segments += [0] * (max_len - len(segments))

    m = sent_offset + sent_pos[E11]
    n = sent_offset + sent_pos[E12]
    p = sent_offset + sent_pos[E21]
    q = sent_offset + sent_pos[E22]
    return AggregateSequence(
        ids=tuple(ids),
        attention_mask=tuple(mask),
        segment_ids=tuple(segments),
        e1_span=Span(m + 1, n),
        e2_span=Span(p + 1, q),
        m=m,
        n=n,
        p=p,
        q=q,
        indicator_span=Span(ind_offset, ind_offset + len(ind_pieces)),
        hash_index=ind_offset + ind_pos[HASH],
        dollar_index=ind_offset + ind_pos[DOLLAR],
    )


def assemble_sentence_only(
    sentence_tokens: Sequence[str],
    vocab: Vocabulary,
    max_len: int,
    instance_id=None,
) -> AggregateSequence:
    """[CLS] + sentence + [SEP]; no indicator segment, no z head rows."""
    sent_pieces, sent_pos = _wordpiece_with_markers(
        sentence_tokens, (E11, E12, E21, E22), vocab
    )
    budget = max_len - 2
    if len(sent_pieces) > budget:
        sent_pieces, sent_pos = _truncate_sentence(sent_pieces, sent_pos, budget, instance_id)
    pieces = [CLS] + sent_pieces + [SEP]
    ids = [vocab.id(p) for p in pieces]
    mask = [1] * len(ids)
    ids += [vocab.pad_id] * (max_len - len(ids))
    mask += [0] * (max_len - len(mask))
    segments = [0] * max_len

    m = 1 + sent_pos[E11]
    n = 1 + sent_pos[E12]
    p = 1 + sent_pos[E21]
    q = 1 + sent_pos[E22]
    return AggregateSequence(
        ids=tuple(ids),
        attention_mask=tuple(mask),
        segment_ids=tuple(segments),
        e1_span=Span(m + 1, n),
        e2_span=Span(p + 1, q),
        m=m,
        n=n,
        p=p,
        q=q,
    )


def assemble_indicator_only(
    indicator_tokens: Sequence[str],
    vocab: Vocabulary,
    max_len: int,
    instance_id=None,
) -> AggregateSequence:
    """[CLS] + indicator + [SEP]; entity heads read the entity subwords on
    either side of the '#'/'$' markers."""
    ind_pieces, ind_pos = _wordpiece_with_markers(indicator_tokens, (HASH, DOLLAR), vocab)
    if len(ind_pieces) + 2 > max_len:
        raise SequenceLengthError(f"instance {instance_id}: indicator exceeds max_len")
    pieces = [CLS] + ind_pieces + [SEP]
    ids = [vocab.id(p) for p in pieces]
    mask = [1] * len(ids)
    ids += [vocab.pad_id] * (max_len - len(ids))
    mask += [0] * (max_len - len(mask))
    segments = [0] * max_len

    offset = 1
    hash_index = offset + ind_pos[HASH]
    dollar_index = offset + ind_pos[DOLLAR]
    e1_span = Span(offset, hash_index)
    e2_span = Span(dollar_index + 1, offset + len(ind_pieces))
    if len(e1_span) < 1 or len(e2_span) < 1:
        raise SequencingError(f"instance {instance_id}: empty entity subwords in indicator")
    return AggregateSequence(
        ids=tuple(ids),
        attention_mask=tuple(mask),
        segment_ids=tuple(segments),
        e1_span=e1_span,
        e2_span=e2_span,
        indicator_span=Span(offset, offset + len(ind_pieces)),
        hash_index=hash_index,
        dollar_index=dollar_index,
    )


INPUT_MODES = ("both", "sentence", "indicator")


def assemble_for_mode(
    mode: str,
    instance: AnnotatedInstance,
    indicator: IndicatorSequence,
    vocab: Vocabulary,
    max_len: int,
) -> AggregateSequence:
    sentence_tokens = insert_entity_markers(instance)
    indicator_tokens = insert_indicator_markers(indicator)
    if mode == "both":
        return assemble(sentence_tokens, indicator_tokens, vocab, max_len, instance.raw.id)
    if mode == "sentence":
        return assemble_sentence_only(sentence_tokens, vocab, max_len, instance.raw.id)
    if mode == "indicator":
        return assemble_indicator_only(indicator_tokens, vocab, max_len, instance.raw.id)
    raise ValueError(f"unknown input mode {mode!r}")


@dataclass(frozen=True)
class EncodedExample:
    instance_id: int
    sequence: AggregateSequence
    label_id: int


def example_to_record(example: EncodedExample) -> dict:
    seq = example.sequence
    return {
        "id": example.instance_id,
        "ids": list(seq.ids),
        "mask": list(seq.attention_mask),
        "segments": list(seq.segment_ids),
        "m": seq.m,
        "n": seq.n,
        "p": seq.p,
        "q": seq.q,
        "e1_start": seq.e1_span.start,
        "e1_stop": seq.e1_span.stop,
        "e2_start": seq.e2_span.start,
        "e2_stop": seq.e2_span.stop,
        "indicator_start": None if seq.indicator_span is None else seq.indicator_span.start,
        "indicator_stop": None if seq.indicator_span is None else seq.indicator_span.stop,
        "hash_index": seq.hash_index,
        "dollar_index": seq.dollar_index,
        "label": example.label_id,
    }


def example_from_record(record: dict) -> EncodedExample:
    ind_span = None
    if record["indicator_start"] is not None:
        ind_span = Span(record["indicator_start"], record["indicator_stop"])
    seq = AggregateSequence(
        ids=tuple(record["ids"]),
        attention_mask=tuple(record["mask"]),
        segment_ids=tuple(record["segments"]),
        e1_span=Span(record["e1_start"], record["e1_stop"]),
        e2_span=Span(record["e2_start"], record["e2_stop"]),
        m=record["m"],
        n=record["n"],
        p=record["p"],
        q=record["q"],
        indicator_span=ind_span,
        hash_index=record["hash_index"],
        dollar_index=record["dollar_index"],
    )
    return EncodedExample(instance_id=record["id"], sequence=seq, label_id=record["label"])


def write_dataset(examples: Iterable[EncodedExample], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for example in examples:
            handle.write(json.dumps(example_to_record(example)) + "\n")


def read_dataset(path) -> list[EncodedExample]:
    with open(path, encoding="utf-8") as handle:
        return [example_from_record(json.loads(line)) for line in handle if line.strip()]
