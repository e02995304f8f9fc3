"""Syntactic-indicator extraction.

Given an annotated instance, take the contiguous token span from the first
token of e1 through the last token of e2 and shrink it with three removal
rules, in order:

1. entity disambiguation   - drop non-kept conjuncts of and/or coordinations
                             and non-head members of compound-noun runs;
2. principal components    - drop modifier-tagged tokens (JJ*, RB*, DT, PDT,
                             CD, PRP$) outside the entity spans;
3. unrelated entities      - drop every remaining non-target noun group
                             strictly between the two entity heads, together
                             with its governing verb.

Every removal is recorded in a trace, one record per removed token.
The entity head tokens (last token of each entity span) are never removed,
so the result always starts inside e1's span and ends inside e2's span.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Sequence

from .corpus import AnnotatedInstance, AnnotatedToken, Span

#: POS tags treated as removable modifiers by rule 2. Overridable per call.
DEFAULT_MODIFIER_TAGS = frozenset(
    {"JJ", "JJR", "JJS", "RB", "RBR", "RBS", "DT", "PDT", "CD", "PRP$"}
)

#: Copula/auxiliary surfaces never removed as governing actions by rule 3.
_LINKING_VERBS = frozenset(
    {"be", "is", "are", "was", "were", "am", "been", "being",
     "have", "has", "had", "having"}
)

_COORDINATORS = frozenset({"and", "or"})


class Rule(Enum):
    ENTITY_DISAMBIGUATION = "entity-disambiguation"
    PRINCIPAL_COMPONENT = "principal-component"
    UNRELATED_ENTITY = "unrelated-entity"


@dataclass(frozen=True)
class RemovalRecord:
    token_index: int  # position in the original sentence
    rule: Rule


@dataclass(frozen=True)
class IndicatorSequence:
    tokens: tuple[AnnotatedToken, ...]
    trace: tuple[RemovalRecord, ...]
    e1_span: Span
    e2_span: Span

    @property
    def e1_tokens(self) -> tuple[AnnotatedToken, ...]:
        return tuple(t for t in self.tokens if t.index in self.e1_span)

    @property
    def e2_tokens(self) -> tuple[AnnotatedToken, ...]:
        return tuple(t for t in self.tokens if t.index in self.e2_span)

    @property
    def interior_tokens(self) -> tuple[AnnotatedToken, ...]:
        return tuple(
            t for t in self.tokens
            if t.index not in self.e1_span and t.index not in self.e2_span
        )

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    def text(self) -> str:
        return " ".join(self.surfaces)


def _is_noun(token: AnnotatedToken) -> bool:
    return token.pos.startswith("NN")


def _is_verb(token: AnnotatedToken) -> bool:
    return token.pos.startswith("VB")


def slice_between_entities(instance: AnnotatedInstance) -> list[AnnotatedToken]:
    """Contiguous tokens from the first token of e1 through the last of e2."""
    return list(instance.tokens[instance.raw.e1_span.start : instance.raw.e2_span.stop])


def _noun_run(tokens: Sequence[AnnotatedToken], at: int, step: int) -> list[int]:
    """Positions of the maximal noun run extending from ``at`` in direction
    ``step`` (inclusive of ``at`` when it is a noun)."""
    run = []
    i = at
    while 0 <= i < len(tokens) and _is_noun(tokens[i]):
        run.append(i)
        i += step
    run.sort()
    return run


def disambiguate_entities(
    tokens: Sequence[AnnotatedToken],
    e1_span: Span,
    e2_span: Span,
) -> tuple[list[AnnotatedToken], list[RemovalRecord]]:
    """Rule 1. Coordinations keep the conjunct holding an entity head (the
    first conjunct when the coordination is interior); compound-noun runs
    keep only the head noun: the entity head when the run overlaps an entity
    span, the rightmost noun otherwise."""
    heads = {e1_span.stop - 1, e2_span.stop - 1}
    current = list(tokens)
    records: list[RemovalRecord] = []

    def remove(positions: list[int]) -> None:
        for pos in sorted(positions, reverse=True):
            records.append(RemovalRecord(current[pos].index, Rule.ENTITY_DISAMBIGUATION))
            del current[pos]

    # Coordinations: noun run CC noun run, resolved left to right.
    while True:
        applied = False
        for i, token in enumerate(current):
            if token.surface.lower() not in _COORDINATORS:
                continue
            left = _noun_run(current, i - 1, -1)
            right = _noun_run(current, i + 1, +1)
            if not left or not right:
                continue
            left_has_head = any(current[p].index in heads for p in left)
            right_has_head = any(current[p].index in heads for p in right)
            if left_has_head and right_has_head:
                continue  # both conjuncts are targets; nothing to disambiguate
            if right_has_head:
                remove(left + [i])
            else:
                remove(right + [i])  # keep left conjunct
            applied = True
            break
        if not applied:
            break

    # Compound nouns: maximal runs of >= 2 consecutive nouns.
    i = 0
    while i < len(current):
        if not _is_noun(current[i]):
            i += 1
            continue
        j = i
        while j < len(current) and _is_noun(current[j]):
            j += 1
        run = list(range(i, j))
        if len(run) >= 2:
            keep = {p for p in run if current[p].index in heads}
            if not keep:
                keep = {run[-1]}
            drop = [p for p in run if p not in keep]
            remove(drop)
            j -= len(drop)
        i = j + 1
    return current, records


def extract_principal_components(
    tokens: Sequence[AnnotatedToken],
    e1_span: Span,
    e2_span: Span,
    modifier_tags: FrozenSet[str] = DEFAULT_MODIFIER_TAGS,
) -> tuple[list[AnnotatedToken], list[RemovalRecord]]:
    """Rule 2. Remove modifier-tagged tokens outside the entity spans."""
    kept: list[AnnotatedToken] = []
    records: list[RemovalRecord] = []
    for token in tokens:
        protected = token.index in e1_span or token.index in e2_span
        if not protected and token.pos in modifier_tags:
            records.append(RemovalRecord(token.index, Rule.PRINCIPAL_COMPONENT))
        else:
            kept.append(token)
    return kept, records


def remove_unrelated_entities(
    tokens: Sequence[AnnotatedToken],
    e1_span: Span,
    e2_span: Span,
) -> tuple[list[AnnotatedToken], list[RemovalRecord]]:
    """Rule 3. Remove each maximal non-target noun group strictly between the
    entity heads, together with its governing action: the nearest preceding
    verb with no other noun between itself and the group. Copula/auxiliary
    verbs linking the target entities are never removed."""
    e1_head = e1_span.stop - 1
    e2_head = e2_span.stop - 1
    current = list(tokens)
    records: list[RemovalRecord] = []

    def interior_noun(pos: int) -> bool:
        token = current[pos]
        return (
            _is_noun(token)
            and e1_head < token.index < e2_head
            and token.index not in e1_span
            and token.index not in e2_span
        )

    i = 0
    while i < len(current):
        if not interior_noun(i):
            i += 1
            continue
        j = i
        while j < len(current) and interior_noun(j):
            j += 1
        group = list(range(i, j))

        action = None
        for k in range(i - 1, -1, -1):
            token = current[k]
            if token.index in e1_span or token.index in e2_span:
                break  # target entities are never governing actions
            if _is_noun(token):
                break
            if _is_verb(token):
                if token.surface.lower() not in _LINKING_VERBS:
                    action = k
                break
        drop = ([action] if action is not None else []) + group
        for pos in sorted(drop, reverse=True):
            records.append(RemovalRecord(current[pos].index, Rule.UNRELATED_ENTITY))
            del current[pos]
        i = i if action is None else i - 1
    return current, records


def extract_indicator(
    instance: AnnotatedInstance,
    modifier_tags: FrozenSet[str] = DEFAULT_MODIFIER_TAGS,
) -> IndicatorSequence:
    """Apply the three rules in order and return the indicator sequence with
    its complete removal trace."""
    e1_span = instance.raw.e1_span
    e2_span = instance.raw.e2_span
    sliced = slice_between_entities(instance)
    step1, rec1 = disambiguate_entities(sliced, e1_span, e2_span)
    step2, rec2 = extract_principal_components(step1, e1_span, e2_span, modifier_tags)
    step3, rec3 = remove_unrelated_entities(step2, e1_span, e2_span)

    tokens = tuple(step3)
    trace = tuple(rec1 + rec2 + rec3)
    assert tokens, "entities are never fully removed"
    assert tokens[0].index in e1_span and tokens[-1].index in e2_span
    assert len(sliced) == len(tokens) + len(trace)
    return IndicatorSequence(tokens=tokens, trace=trace, e1_span=e1_span, e2_span=e2_span)


def rule_counts(sequences: Sequence[IndicatorSequence]) -> dict[str, int]:
    """Aggregate removal counts per rule over many extractions."""
    counts = {rule.value: 0 for rule in Rule}
    for seq in sequences:
        for record in seq.trace:
            counts[record.rule.value] += 1
    return counts
