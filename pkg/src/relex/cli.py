"""Command-line entry point.

Subcommands: preprocess, extract-indicators, train, evaluate, ablate,
score. Each takes a JSON pipeline config (--config); individual flags
(--seed, --limit, --mode) override config values. All file outputs land
under the configured output directory; report paths write JSON, TSV, an
aligned text table, and PNG figures.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import evaluation, figures
from .corpus import (
    AlignmentError,
    CorpusError,
    RelationLabel,
    attach_annotation_file,
    parse_semeval_file,
)
from .encoders import EncoderConfig, EncoderLoadError
from .evaluation import EvaluationError, run_ablation, score_official
from .indicator import extract_indicator, rule_counts
from .model import build_model
from .sequencing import (
    EncodedExample,
    SequencingError,
    Vocabulary,
    assemble_for_mode,
    write_dataset,
)
from .training import (
    CheckpointError,
    TrainConfig,
    TrainingError,
    load_checkpoint,
    predict,
    set_seed,
    train,
)


class ConfigError(Exception):
    pass


@dataclass
class PipelineConfig:
    output_dir: Path
    train_file: Path | None = None
    train_annotations: Path | None = None
    test_file: Path | None = None
    test_annotations: Path | None = None
    vocab_file: Path | None = None
    mode: str = "both"
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    include_marker_rows: bool = False
    include_indicator_markers: bool = False

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as handle:
                data = json.load(handle)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from None
        known = {
            "output_dir", "train_file", "train_annotations", "test_file",
            "test_annotations", "vocab_file", "mode", "encoder", "train",
            "include_marker_rows", "include_indicator_markers",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "output_dir" not in data:
            raise ConfigError("config requires output_dir")
        paths = {
            key: Path(data[key]) if data.get(key) else None
            for key in ("train_file", "train_annotations", "test_file",
                        "test_annotations", "vocab_file")
        }
        try:
            encoder = EncoderConfig.from_dict(data.get("encoder", {}))
            train_cfg = TrainConfig.from_dict(data.get("train", {}))
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err)) from None
        config = cls(
            output_dir=Path(data["output_dir"]),
            mode=data.get("mode", "both"),
            encoder=encoder,
            train=train_cfg,
            include_marker_rows=bool(data.get("include_marker_rows", False)),
            include_indicator_markers=bool(data.get("include_indicator_markers", False)),
            **paths,
        )
        config.validate_paths()
        return config

    def validate_paths(self) -> None:
        for name in ("train_file", "train_annotations", "test_file",
                     "test_annotations", "vocab_file"):
            value = getattr(self, name)
            if value is not None and not value.exists():
                raise ConfigError(f"{name} does not exist: {value}")

    def require(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise ConfigError(f"config is missing required path: {name}")


def _apply_overrides(config: PipelineConfig, args) -> PipelineConfig:
    if getattr(args, "seed", None) is not None:
        config.train.seed = args.seed
    if getattr(args, "mode", None) is not None:
        config.mode = args.mode
    return config


def _load_split(config: PipelineConfig, split: str, limit: int | None):
    corpus_path = getattr(config, f"{split}_file")
    annotation_path = getattr(config, f"{split}_annotations")
    instances = parse_semeval_file(corpus_path)
    if limit is not None:
        instances = instances[:limit]
    annotated = attach_annotation_file(instances, annotation_path)
    if limit is not None:
        annotated = annotated[:limit]
    return annotated


def _encode_split(annotated, vocab, mode, max_len):
    indicators = [extract_indicator(inst) for inst in annotated]
    examples = [
        EncodedExample(
            instance_id=inst.raw.id,
            sequence=assemble_for_mode(mode, inst, ind, vocab, max_len),
            label_id=inst.raw.label.id,
        )
        for inst, ind in zip(annotated, indicators)
    ]
    return examples, indicators


def _vocab(config: PipelineConfig) -> Vocabulary:
    config.require("vocab_file")
    return Vocabulary.from_file(config.vocab_file)


def _figures_dir(config: PipelineConfig) -> Path:
    path = config.output_dir / "figures"
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_preprocess(args) -> int:
    config = _apply_overrides(PipelineConfig.load(args.config), args)
    config.require("train_file", "train_annotations")
    vocab = _vocab(config)
    config.output_dir.mkdir(parents=True, exist_ok=True)

    summary = {"mode": config.mode, "splits": {}}
    splits = [("train", config.train_file)]
    if config.test_file is not None:
        config.require("test_annotations")
        splits.append(("test", config.test_file))
    for split, _ in splits:
        annotated = _load_split(config, split, args.limit)
        examples, indicators = _encode_split(
            annotated, vocab, config.mode, config.train.max_len
        )
        out = config.output_dir / f"{split}.jsonl"
        write_dataset(examples, out)
        summary["splits"][split] = {
            "instances": len(examples),
            "removals_per_rule": rule_counts(indicators),
        }
        print(f"{split}: {len(examples)} records -> {out}")
    with open(config.output_dir / "extraction_summary.json", "w", encoding="utf-8") as handle:
        json.dump(summary, handle, indent=2)
    return 0


def cmd_extract_indicators(args) -> int:
    config = _apply_overrides(PipelineConfig.load(args.config), args)
    config.require("train_file", "train_annotations")
    annotated = _load_split(config, "train", args.limit)
    for instance in annotated:
        indicator = extract_indicator(instance)
        if args.trace:
            record = {
                "id": instance.raw.id,
                "indicator": list(indicator.surfaces),
                "trace": [
                    {
                        "index": rec.token_index,
                        "surface": instance.tokens[rec.token_index].surface,
                        "rule": rec.rule.value,
                    }
                    for rec in indicator.trace
                ],
            }
            print(json.dumps(record))
        else:
            print(f"{instance.raw.id}\t{indicator.text()}")
    return 0


def cmd_train(args) -> int:
    config = _apply_overrides(PipelineConfig.load(args.config), args)
    config.require("train_file", "train_annotations")
    vocab = _vocab(config)
    config.output_dir.mkdir(parents=True, exist_ok=True)

    annotated = _load_split(config, "train", args.limit)
    examples, _ = _encode_split(annotated, vocab, config.mode, config.train.max_len)

    config.encoder.vocab_size = len(vocab)
    set_seed(config.train.seed)
    model = build_model(
        config.encoder,
        mode=config.mode,
        dropout=config.train.dropout,
        include_marker_rows=config.include_marker_rows,
        include_indicator_markers=config.include_indicator_markers,
    )
    result = train(
        examples,
        model,
        config.encoder,
        vocab,
        config.train,
        out_dir=config.output_dir,
        log=print,
    )
    figures.save_training_curves(result.metrics, _figures_dir(config) / "training_curves.png")
    print(f"final checkpoint: {result.final_checkpoint}")
    return 0


def _write_report(config: PipelineConfig, report, stem: str) -> None:
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{stem}.json", "w", encoding="utf-8") as handle:
        json.dump(evaluation.report_to_dict(report), handle, indent=2)
    (out / f"{stem}.tsv").write_text(evaluation.report_to_tsv(report), encoding="utf-8")
    text = evaluation.render_report_text(report)
    (out / f"{stem}.txt").write_text(text + "\n", encoding="utf-8")
    figures.save_per_class_figure(report, _figures_dir(config) / f"{stem}.png")
    print(text)


def cmd_evaluate(args) -> int:
    config = _apply_overrides(PipelineConfig.load(args.config), args)
    config.require("test_file", "test_annotations")
    vocab = _vocab(config)
    checkpoint = Path(args.checkpoint) if args.checkpoint else config.output_dir / "model.best.pt"
    if not checkpoint.exists():
        raise CheckpointError(f"checkpoint not found: {checkpoint}")
    model, meta = load_checkpoint(checkpoint, vocab)
    mode = meta["model"]["mode"]

    annotated = _load_split(config, "test", args.limit)
    examples, _ = _encode_split(annotated, vocab, mode, config.train.max_len)
    pred_ids = predict(model, examples, batch_size=config.train.batch_size)

    gold = [RelationLabel.from_id(ex.label_id) for ex in examples]
    pred = [RelationLabel.from_id(i) for i in pred_ids]
    config.output_dir.mkdir(parents=True, exist_ok=True)
    evaluation.write_prediction_file(
        config.output_dir / "predictions.tsv",
        [ex.instance_id for ex in examples],
        pred,
    )
    report = score_official(gold, pred)
    _write_report(config, report, "evaluation_report")
    print(f"macro-F1: {report.macro_f1:.2f}")
    return 0


def cmd_ablate(args) -> int:
    config = _apply_overrides(PipelineConfig.load(args.config), args)
    config.require("train_file", "train_annotations", "test_file", "test_annotations")
    vocab = _vocab(config)
    config.output_dir.mkdir(parents=True, exist_ok=True)

    train_annotated = _load_split(config, "train", args.limit)
    eval_annotated = _load_split(config, "test", args.limit)
    train_indicators = [extract_indicator(i) for i in train_annotated]
    eval_indicators = [extract_indicator(i) for i in eval_annotated]

    config.encoder.vocab_size = len(vocab)
    report = run_ablation(
        train_annotated,
        train_indicators,
        eval_annotated,
        eval_indicators,
        vocab,
        config.encoder,
        config.train,
        out_dir=config.output_dir,
    )
    out = config.output_dir
    with open(out / "ablation.json", "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, indent=2)
    (out / "ablation.tsv").write_text(report.to_tsv(), encoding="utf-8")
    text = report.render_text()
    (out / "ablation.txt").write_text(text + "\n", encoding="utf-8")
    figures.save_ablation_figure(report, _figures_dir(config) / "ablation.png")
    print(text)
    return 0


def cmd_score(args) -> int:
    gold_entries = evaluation.read_prediction_file(args.gold)
    pred_entries = evaluation.read_prediction_file(args.pred)
    gold, pred = evaluation.align_predictions(gold_entries, pred_entries)
    report = score_official(gold, pred)
    if args.output_dir:
        config = PipelineConfig(output_dir=Path(args.output_dir))
        _write_report(config, report, "score_report")
    else:
        print(evaluation.render_report_text(report))
    print(f"macro-F1: {report.macro_f1:.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relex",
        description="Indicator-aware relation extraction pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="pipeline config JSON")
        p.add_argument("--seed", type=int, default=None, help="override train.seed")
        p.add_argument("--limit", type=int, default=None, help="cap instances per split")
        p.add_argument(
            "--mode",
            choices=("both", "sentence", "indicator"),
            default=None,
            help="override input mode",
        )

    p = sub.add_parser("preprocess", help="parse, annotate, extract, assemble")
    common(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("extract-indicators", help="emit indicator sequences")
    common(p)
    p.add_argument("--trace", action="store_true", help="emit JSON traces")
    p.set_defaults(func=cmd_extract_indicators)

    p = sub.add_parser("train", help="train a model")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on the test split")
    common(p)
    p.add_argument("--checkpoint", default=None, help="checkpoint path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="train and score every input mode")
    common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("score", help="score a prediction file against gold")
    p.add_argument("--gold", required=True, help="gold answer-key file")
    p.add_argument("--pred", required=True, help="prediction file")
    p.add_argument("--output-dir", default=None, help="write report files here")
    p.set_defaults(func=cmd_score)

    return parser


_ERRORS = (
    ConfigError,
    CorpusError,
    AlignmentError,
    SequencingError,
    EvaluationError,
    TrainingError,
    CheckpointError,
    EncoderLoadError,
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
