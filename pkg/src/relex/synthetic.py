"""Synthetic separable corpora for desk-scale training and overfit tests.

Four relation classes, each signalled by a distinct verb/preposition
pattern between the entities. Instances are emitted in the distribution
format and parsed back through the corpus module, so the generator doubles
as a parser exercise.
"""

from __future__ import annotations

import random
from pathlib import Path

from .corpus import (
    AnnotatedInstance,
    attach_annotations,
    parse_annotation_blocks,
    parse_semeval_lines,
)

_NOUNS = (
    "gadget", "motor", "vessel", "crate", "signal", "engine", "parcel",
    "bottle", "crowd", "village", "statue", "copper", "lantern", "barrel",
    "singer", "troupe", "widget", "beacon", "cellar", "hammer",
)

_ADJECTIVES = ("old", "shiny", "heavy", "quiet", "narrow", "rusty")

# (label, [(surface, pos), ...]) with E1/E2 entity slots
_TEMPLATES = (
    ("Cause-Effect(e1,e2)", (("E1", None), ("caused", "VBD"), ("the", "DT"), ("E2", None))),
    (
        "Content-Container(e1,e2)",
        (("E1", None), ("was", "VBD"), ("hidden", "VBN"), ("inside", "IN"),
         ("the", "DT"), ("E2", None)),
    ),
    (
        "Entity-Destination(e1,e2)",
        (("E1", None), ("moved", "VBD"), ("into", "IN"), ("the", "DT"), ("E2", None)),
    ),
    ("Member-Collection(e1,e2)", (("E1", None), ("joined", "VBD"), ("the", "DT"), ("E2", None))),
)

SYNTHETIC_LABELS = tuple(label for label, _ in _TEMPLATES)


def synthetic_records(
    n: int = 200, seed: int = 0, n_classes: int = 4
) -> tuple[str, str]:
    """Return (corpus file text, annotation file text) for n instances."""
    if not 1 <= n_classes <= len(_TEMPLATES):
        raise ValueError(f"n_classes must lie in 1..{len(_TEMPLATES)}")
    rng = random.Random(seed)
    corpus_lines = []
    annotation_lines = []
    for i in range(n):
        label, body = _TEMPLATES[i % n_classes]
        e1 = rng.choice(_NOUNS)
        e2 = rng.choice(_NOUNS)
        words: list[tuple[str, str]] = [("The", "DT")]
        tagged_parts = ["The"]
        for surface, pos in body:
            if surface == "E1":
                if rng.random() < 0.4:
                    adj = rng.choice(_ADJECTIVES)
                    words.append((adj, "JJ"))
                    tagged_parts.append(adj)
                words.append((e1, "NN"))
                tagged_parts.append(f"<e1>{e1}</e1>")
            elif surface == "E2":
                if rng.random() < 0.4:
                    adj = rng.choice(_ADJECTIVES)
                    words.append((adj, "JJ"))
                    tagged_parts.append(adj)
                words.append((e2, "NN"))
                tagged_parts.append(f"<e2>{e2}</e2>")
            else:
                words.append((surface, pos))
                tagged_parts.append(surface)
        if rng.random() < 0.3:
            words.append(("yesterday", "RB"))
            tagged_parts.append("yesterday")
        words.append((".", "."))
        tagged_parts.append(".")

        sentence = " ".join(tagged_parts)
        corpus_lines.append(f'{i + 1}\t"{sentence}"')
        corpus_lines.append(label)
        corpus_lines.append("Comment:")
        corpus_lines.append("")
        for surface, pos in words:
            annotation_lines.append(f"{surface}\t{pos}\tO")
        annotation_lines.append("")
    return "\n".join(corpus_lines) + "\n", "\n".join(annotation_lines) + "\n"


def synthetic_annotated(
    n: int = 200, seed: int = 0, n_classes: int = 4
) -> list[AnnotatedInstance]:
    corpus_text, annotation_text = synthetic_records(n, seed, n_classes)
    instances = parse_semeval_lines(corpus_text.splitlines())
    blocks = parse_annotation_blocks(annotation_text.splitlines())
    return attach_annotations(instances, blocks)


def write_synthetic_files(
    directory: Path | str, n: int = 200, seed: int = 0, n_classes: int = 4
) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    corpus_text, annotation_text = synthetic_records(n, seed, n_classes)
    corpus_path = directory / "synthetic_corpus.txt"
    annotation_path = directory / "synthetic_annotations.txt"
    corpus_path.write_text(corpus_text, encoding="utf-8")
    annotation_path.write_text(annotation_text, encoding="utf-8")
    return corpus_path, annotation_path
