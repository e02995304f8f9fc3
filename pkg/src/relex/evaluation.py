"""Official SemEval-2010 Task 8 scoring, per-class reports, and the
ablation harness.

The official metric is the macro-averaged F1 over the nine real relations
(Other excluded). A true positive requires relation *and* direction to
match; the per-relation precision/recall denominators pool both directions
of that relation. Percentages are reported to two decimals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import (
    LABELS,
    N_LABELS,
    RELATIONS,
    RelationLabel,
    parse_label,
)
from .encoders import RECURRENT_CONV, EncoderConfig
from .model import NONBERT_MODES, build_model
from .sequencing import EncodedExample, Vocabulary, assemble_for_mode
from .training import TrainConfig, predict, set_seed, train


class EvaluationError(Exception):
    pass


@dataclass(frozen=True)
class ClassScores:
    precision: float  # percent
    recall: float
    f1: float


@dataclass
class ClassReport:
    """Per-relation precision/recall/F1 (percent) and their macro-F1."""

    rows: dict[str, ClassScores]
    macro_f1: float
    total: int

    def row(self, relation: str) -> ClassScores:
        return self.rows[relation]


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (19, 19) gold x predicted
    labels: tuple[str, ...] = tuple(LABELS)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def score_official(
    gold: Sequence[RelationLabel], pred: Sequence[RelationLabel]
) -> ClassReport:
    """Score predictions with the official directed macro-F1.

    For each of the nine relations R: TP counts instances where gold and
    prediction agree on both relation and direction; the precision
    denominator counts every prediction of R regardless of direction, the
    recall denominator every gold R regardless of direction.
    """
    if len(gold) != len(pred):
        raise EvaluationError(f"{len(gold)} gold labels vs {len(pred)} predictions")
    rows: dict[str, ClassScores] = {}
    f1s = []
    for relation in RELATIONS:
        tp = sum(
            1
            for g, p in zip(gold, pred)
            if g.relation == relation and p.relation == relation and g.direction == p.direction
        )
        n_pred = sum(1 for p in pred if p.relation == relation)
        n_gold = sum(1 for g in gold if g.relation == relation)
        precision = tp / n_pred if n_pred else 0.0
        recall = tp / n_gold if n_gold else 0.0
        f1 = _f1(precision, recall)
        rows[relation] = ClassScores(
            precision=100.0 * precision, recall=100.0 * recall, f1=100.0 * f1
        )
        f1s.append(f1)
    macro = 100.0 * sum(f1s) / len(RELATIONS)
    return ClassReport(rows=rows, macro_f1=macro, total=len(gold))


def confusion_matrix(
    gold: Sequence[RelationLabel], pred: Sequence[RelationLabel]
) -> ConfusionMatrix:
    if len(gold) != len(pred):
        raise EvaluationError(f"{len(gold)} gold labels vs {len(pred)} predictions")
    counts = np.zeros((N_LABELS, N_LABELS), dtype=np.int64)
    for g, p in zip(gold, pred):
        counts[g.id, p.id] += 1
    return ConfusionMatrix(counts=counts)


def render_report_text(report: ClassReport, title: str = "Official scoring") -> str:
    width = max(len(r) for r in RELATIONS)
    lines = [title, f"{'Relation':<{width}}  {'P':>7}  {'R':>7}  {'F1':>7}"]
    for relation in RELATIONS:
        row = report.rows[relation]
        lines.append(
            f"{relation:<{width}}  {row.precision:7.2f}  {row.recall:7.2f}  {row.f1:7.2f}"
        )
    lines.append(f"{'macro-F1':<{width}}  {'':7}  {'':7}  {report.macro_f1:7.2f}")
    return "\n".join(lines)


def report_to_dict(report: ClassReport) -> dict:
    return {
        "relations": {
            rel: {
                "precision": round(report.rows[rel].precision, 2),
                "recall": round(report.rows[rel].recall, 2),
                "f1": round(report.rows[rel].f1, 2),
            }
            for rel in RELATIONS
        },
        "macro_f1": round(report.macro_f1, 2),
        "total": report.total,
    }


def report_to_tsv(report: ClassReport) -> str:
    lines = ["relation\tprecision\trecall\tf1"]
    for rel in RELATIONS:
        row = report.rows[rel]
        lines.append(f"{rel}\t{row.precision:.2f}\t{row.recall:.2f}\t{row.f1:.2f}")
    lines.append(f"macro-F1\t\t\t{report.macro_f1:.2f}")
    return "\n".join(lines) + "\n"


def per_class_report(
    gold: Sequence[RelationLabel],
    pred_base: Sequence[RelationLabel],
    pred_new: Sequence[RelationLabel],
    names: tuple[str, str] = ("base", "new"),
) -> str:
    """Side-by-side per-relation P/R/F1 for two runs with deltas.

    All nine relations appear even when absent from the predictions.
    """
    base = score_official(gold, pred_base)
    new = score_official(gold, pred_new)
    width = max(len(r) for r in RELATIONS)
    header = (
        f"{'Relation':<{width}}  "
        f"{'P(' + names[0] + ')':>10} {'P(' + names[1] + ')':>10} {'dP':>7}  "
        f"{'R(' + names[0] + ')':>10} {'R(' + names[1] + ')':>10} {'dR':>7}  "
        f"{'F1(' + names[0] + ')':>10} {'F1(' + names[1] + ')':>10} {'dF1':>7}"
    )
    lines = [header]
    for rel in RELATIONS:
        b, n = base.rows[rel], new.rows[rel]
        lines.append(
            f"{rel:<{width}}  "
            f"{b.precision:10.2f} {n.precision:10.2f} {n.precision - b.precision:+7.2f}  "
            f"{b.recall:10.2f} {n.recall:10.2f} {n.recall - b.recall:+7.2f}  "
            f"{b.f1:10.2f} {n.f1:10.2f} {n.f1 - b.f1:+7.2f}"
        )
    lines.append(
        f"{'macro-F1':<{width}}  "
        f"{'':10} {'':10} {'':7}  {'':10} {'':10} {'':7}  "
        f"{base.macro_f1:10.2f} {new.macro_f1:10.2f} {new.macro_f1 - base.macro_f1:+7.2f}"
    )
    return "\n".join(lines)


def read_prediction_file(path) -> list[tuple[int, RelationLabel]]:
    """Official answer-key format: one ``<id><TAB><label>`` line per
    instance."""
    out = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise EvaluationError(f"{path}: line {line_no}: expected <id><TAB><label>")
            id_part, _, label_part = line.partition("\t")
            try:
                instance_id = int(id_part)
            except ValueError:
                raise EvaluationError(f"{path}: line {line_no}: bad id {id_part!r}") from None
            out.append((instance_id, parse_label(label_part)))
    return out


def write_prediction_file(path, ids: Sequence[int], labels: Sequence[RelationLabel]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for instance_id, label in zip(ids, labels):
            handle.write(f"{instance_id}\t{label}\n")


def align_predictions(
    gold_entries: Sequence[tuple[int, RelationLabel]],
    pred_entries: Sequence[tuple[int, RelationLabel]],
) -> tuple[list[RelationLabel], list[RelationLabel]]:
    gold_map = dict(gold_entries)
    pred_map = dict(pred_entries)
    if set(gold_map) != set(pred_map):
        missing = sorted(set(gold_map) ^ set(pred_map))[:5]
        raise EvaluationError(f"gold/prediction id sets differ (e.g. {missing})")
    ids = sorted(gold_map)
    return [gold_map[i] for i in ids], [pred_map[i] for i in ids]


# --- ablation harness ------------------------------------------------------

BERT_MODE_NAMES = {
    "both": "Entire Sentence + Indicator Sequence",
    "sentence": "Entire Sentence",
    "indicator": "Indicator Sequence",
}
NONBERT_MODE_NAMES = {
    "both": "Entire Sentence + Indicator Sequence",
    "sentence": "Entire Sentence + -",
    "indicator": "- + Indicator Sequence",
    "sentence-twice": "Entire Sentence + Entire Sentence",
}


@dataclass
class AblationRow:
    mode: str
    name: str
    macro_f1: float
    report: ClassReport


@dataclass
class AblationReport:
    variant: str
    rows: list[AblationRow] = field(default_factory=list)

    def render_text(self) -> str:
        width = max(len(r.name) for r in self.rows) + 2
        lines = [f"Ablation ({self.variant})", f"{'Input':<{width}}  {'F1':>7}"]
        for row in self.rows:
            lines.append(f"{row.name:<{width}}  {row.macro_f1:7.2f}")
        return "\n".join(lines)

    def to_tsv(self) -> str:
        lines = ["input\tmacro_f1"]
        for row in self.rows:
            lines.append(f"{row.name}\t{row.macro_f1:.2f}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "rows": [
                {"mode": r.mode, "input": r.name, "macro_f1": round(r.macro_f1, 2)}
                for r in self.rows
            ],
        }


def _encode_corpus(annotated, indicators, vocab, mode: str, max_len: int):
    examples = []
    for instance, indicator in zip(annotated, indicators):
        seq = assemble_for_mode(mode, instance, indicator, vocab, max_len)
        examples.append(
            EncodedExample(
                instance_id=instance.raw.id,
                sequence=seq,
                label_id=instance.raw.label.id,
            )
        )
    return examples


def run_ablation(
    train_annotated,
    train_indicators,
    eval_annotated,
    eval_indicators,
    vocab: Vocabulary,
    encoder_config: EncoderConfig,
    train_config: TrainConfig,
    out_dir: Path | str | None = None,
) -> AblationReport:
    """Train and score one run per input mode with identical seeds and
    hyperparameters.

    Transformer variants run the three input modes of the upper comparison
    block; the recurrent-plus-convolutional variant adds the sentence-twice
    row and routes segments inside the model instead of reassembling.
    """
    nonbert = encoder_config.variant == RECURRENT_CONV
    modes = list(NONBERT_MODES) if nonbert else ["both", "sentence", "indicator"]
    names = NONBERT_MODE_NAMES if nonbert else BERT_MODE_NAMES

    report = AblationReport(variant=encoder_config.variant)
    for mode in modes:
        assembly_mode = "both" if nonbert else mode
        train_examples = _encode_corpus(
            train_annotated, train_indicators, vocab, assembly_mode, train_config.max_len
        )
        eval_examples = _encode_corpus(
            eval_annotated, eval_indicators, vocab, assembly_mode, train_config.max_len
        )
        set_seed(train_config.seed)
        model = build_model(encoder_config, mode=mode, dropout=train_config.dropout)
        run_dir = None if out_dir is None else Path(out_dir) / f"mode_{mode}"
        train(
            train_examples,
            model,
            encoder_config,
            vocab,
            train_config,
            out_dir=run_dir,
        )
        pred_ids = predict(model, eval_examples, batch_size=train_config.batch_size)
        gold = [RelationLabel.from_id(ex.label_id) for ex in eval_examples]
        pred = [RelationLabel.from_id(i) for i in pred_ids]
        scored = score_official(gold, pred)
        report.rows.append(
            AblationRow(mode=mode, name=names[mode], macro_f1=scored.macro_f1, report=scored)
        )
    return report
