import random

import pytest

from relex.corpus import (
    AnnotatedInstance,
    attach_annotations,
    parse_annotation_blocks,
    parse_semeval_lines,
)


def build_instance(tagged: str, label: str, pos_tags: str, inst_id: int = 1) -> AnnotatedInstance:
    """Assemble one annotated instance from a tagged sentence, a label line,
    and a space-separated POS string aligned with the tokenization."""
    record = f'{inst_id}\t"{tagged}"\n{label}\nComment:\n\n'
    instances = parse_semeval_lines(record.splitlines())
    tags = pos_tags.split()
    tokens = instances[0].tokens
    assert len(tags) == len(tokens), f"{len(tags)} tags for {len(tokens)} tokens: {tokens}"
    block = [[(surface, pos, "O") for surface, pos in zip(tokens, tags)]]
    return attach_annotations(instances, block)[0]


# Reconstructions of the three published walk-through extractions: the rules
# must produce "shock caused by attack", "coins are enclosed in case", and
# "analyzer using method".
FIG_TRIO = (
    (
        "Their <e1>shock</e1> and anger caused by the surprise <e2>attack</e2> was palpable .",
        "Cause-Effect(e2,e1)",
        "PRP$ NN CC NN VBN IN DT NN NN VBD JJ .",
        "shock caused by attack",
    ),
    (
        "The <e1>coins</e1> are enclosed in a clear hard <e2>plastic case</e2> .",
        "Content-Container(e1,e2)",
        "DT NNS VBP VBN IN DT JJ JJ NN NN .",
        "coins are enclosed in case",
    ),
    (
        "A static <e1>analyzer</e1> identifies the first infeasible constraint paths using a propagation <e2>method</e2> .",
        "Instrument-Agency(e2,e1)",
        "DT JJ NN VBZ DT JJ JJ NN NNS VBG DT NN NN .",
        "analyzer using method",
    ),
)

FIG1_SENTENCE = (
    "My new <e1>boss</e1> moved into his <e2>office</e2> yesterday .",
    "Entity-Destination(e1,e2)",
    "PRP$ JJ NN VBD IN PRP$ NN RB .",
)


@pytest.fixture
def fig_trio():
    return [
        (build_instance(tagged, label, tags, i + 1), expected)
        for i, (tagged, label, tags, expected) in enumerate(FIG_TRIO)
    ]


@pytest.fixture
def fig1_instance():
    tagged, label, tags = FIG1_SENTENCE
    return build_instance(tagged, label, tags)


_POS_POOL = ("NN", "NNS", "NNP", "JJ", "RB", "DT", "IN", "VBD", "VBZ", "VBG",
             "CC", "PRP$", "CD", "PRP", "TO")


def random_annotated_instance(rng: random.Random, inst_id: int = 1) -> AnnotatedInstance:
    """Arbitrary tagged sentence with valid, non-overlapping entity spans."""
    n = rng.randint(5, 16)
    surfaces = [f"w{rng.randint(0, 30)}" for _ in range(n)]
    tags = [rng.choice(_POS_POOL) for _ in range(n)]
    e1_len = rng.randint(1, 2)
    e2_len = rng.randint(1, 2)
    e1_start = rng.randint(0, n - e1_len - e2_len - 1)
    e1_stop = e1_start + e1_len
    e2_start = rng.randint(e1_stop, n - e2_len)
    e2_stop = e2_start + e2_len

    parts = []
    for i, surface in enumerate(surfaces):
        if i == e1_start:
            parts.append("<e1>")
        if i == e2_start:
            parts.append("<e2>")
        parts.append(surface)
        if i == e1_stop - 1:
            parts.append("</e1>")
        if i == e2_stop - 1:
            parts.append("</e2>")
    tagged = (
        " ".join(parts)
        .replace("<e1> ", "<e1>")
        .replace(" </e1>", "</e1>")
        .replace("<e2> ", "<e2>")
        .replace(" </e2>", "</e2>")
    )
    return build_instance(tagged, "Other", " ".join(tags), inst_id)
