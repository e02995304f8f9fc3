"""Training loop, seeding, and checkpoint round-tripping.

Defaults: batch size 16, Adam at 2e-5, 5 epochs, dropout 0.1,
L2 coefficient 5e-3, ranking-loss beta 5.0, max sequence length 128.
The negative class for every instance is re-selected from the current
probabilities in each round. A seeded 10% slice of the training data is
held out for model selection unless a dev set is supplied.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from .corpus import RelationLabel
from .encoders import EncoderConfig
from .model import LossConfig, collate_examples, model_from_description, describe_model
from .sequencing import EncodedExample, Vocabulary


class TrainingError(Exception):
    pass


class CheckpointError(Exception):
    pass


@dataclass
class TrainConfig:
    max_len: int = 128
    batch_size: int = 16
    learning_rate: float = 2e-5
    epochs: float = 5.0
    dropout: float = 0.1
    l2_lambda: float = 5e-3
    beta: float = 5.0
    seed: int = 42
    dev_fraction: float = 0.1
    warmup: bool = False  # linear warmup over the first 10% of steps
    single_thread: bool = False  # strict reproducibility mode

    def __post_init__(self):
        for name in ("max_len", "batch_size", "learning_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if not 0.0 <= self.dev_fraction < 1.0:
            raise ValueError("dev_fraction must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        return cls(**data)


def set_seed(seed: int) -> None:
    """Seed every stochastic component: init, dropout, shuffling."""
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def split_dev(
    examples: Sequence[EncodedExample], fraction: float, seed: int
) -> tuple[list[EncodedExample], list[EncodedExample]]:
    """Seeded holdout split; returns (train, dev)."""
    order = list(range(len(examples)))
    random.Random(seed).shuffle(order)
    n_dev = int(len(examples) * fraction)
    dev_idx = set(order[:n_dev])
    train = [examples[i] for i in range(len(examples)) if i not in dev_idx]
    dev = [examples[i] for i in range(len(examples)) if i in dev_idx]
    return train, dev


def iterate_batches(
    examples: Sequence[EncodedExample], batch_size: int, rng: random.Random | None = None
):
    order = list(range(len(examples)))
    if rng is not None:
        rng.shuffle(order)
    for start in range(0, len(order), batch_size):
        yield [examples[i] for i in order[start : start + batch_size]]


def predict(
    model: torch.nn.Module, examples: Sequence[EncodedExample], batch_size: int = 32
) -> list[int]:
    """Evaluation-mode label ids, deterministic (dropout disabled)."""
    was_training = model.training
    model.eval()
    out: list[int] = []
    with torch.no_grad():
        for batch_examples in iterate_batches(examples, batch_size):
            batch = collate_examples(
                batch_examples,
                include_marker_rows=getattr(model, "include_marker_rows", False),
                include_indicator_markers=getattr(model, "include_indicator_markers", False),
            )
            probs = model(batch)
            out.extend(int(i) for i in probs.argmax(dim=1))
    if was_training:
        model.train()
    return out


def _macro_f1(gold_ids: Sequence[int], pred_ids: Sequence[int]) -> float:
    from .evaluation import score_official

    gold = [RelationLabel.from_id(i) for i in gold_ids]
    pred = [RelationLabel.from_id(i) for i in pred_ids]
    return score_official(gold, pred).macro_f1


@dataclass
class TrainResult:
    metrics: list[dict] = field(default_factory=list)
    best_checkpoint: Path | None = None
    final_checkpoint: Path | None = None
    best_dev_f1: float | None = None


def train(
    examples: Sequence[EncodedExample],
    model: torch.nn.Module,
    encoder_config: EncoderConfig,
    vocab: Vocabulary,
    cfg: TrainConfig,
    out_dir: Path | str | None = None,
    dev_examples: Sequence[EncodedExample] | None = None,
    log: Callable[[str], None] | None = None,
) -> TrainResult:
    """Optimize the model with Adam, logging per-epoch loss and dev macro-F1
    and writing best/final checkpoints when ``out_dir`` is given."""
    set_seed(cfg.seed)
    if cfg.single_thread:
        torch.set_num_threads(1)

    if dev_examples is None and cfg.dev_fraction > 0:
        train_examples, dev_examples = split_dev(examples, cfg.dev_fraction, cfg.seed)
    else:
        train_examples = list(examples)
        dev_examples = list(dev_examples or [])

    loss_cfg = LossConfig(beta=cfg.beta, l2_lambda=cfg.l2_lambda)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    epochs = int(round(cfg.epochs))
    steps_per_epoch = max(1, (len(train_examples) + cfg.batch_size - 1) // cfg.batch_size)
    scheduler = None
    if cfg.warmup:
        total = max(1, epochs * steps_per_epoch)
        warm = max(1, total // 10)
        scheduler = torch.optim.lr_scheduler.LambdaLR(
            optimizer, lambda step: min(1.0, (step + 1) / warm)
        )

    include_markers = getattr(model, "include_marker_rows", False)
    include_ind_markers = getattr(model, "include_indicator_markers", False)

    result = TrainResult()
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    def checkpoint(name: str, step: int) -> Path:
        path = out_path / name
        save_checkpoint(path, model, encoder_config, vocab, step=step, seed=cfg.seed)
        return path

    shuffler = random.Random(cfg.seed)
    step = 0
    best_dev = None
    for epoch in range(epochs):
        model.train()
        epoch_loss = 0.0
        for batch_no, batch_examples in enumerate(
            iterate_batches(train_examples, cfg.batch_size, shuffler)
        ):
            batch = collate_examples(
                batch_examples,
                include_marker_rows=include_markers,
                include_indicator_markers=include_ind_markers,
            )
            probs = model(batch)
            loss = model.loss(probs, batch["labels"], loss_cfg)
            if not torch.isfinite(loss):
                ids = ", ".join(str(i) for i in batch["instance_ids"])
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} batch {batch_no} (instances {ids})"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            if scheduler is not None:
                scheduler.step()
            epoch_loss += loss.item()
            step += 1

        entry = {
            "epoch": epoch + 1,
            "train_loss": epoch_loss,
            "dev_macro_f1": None,
        }
        if dev_examples:
            dev_pred = predict(model, dev_examples, batch_size=cfg.batch_size)
            dev_gold = [ex.label_id for ex in dev_examples]
            entry["dev_macro_f1"] = _macro_f1(dev_gold, dev_pred)
            if out_path is not None and (best_dev is None or entry["dev_macro_f1"] >= best_dev):
                best_dev = entry["dev_macro_f1"]
                result.best_checkpoint = checkpoint("model.best.pt", step)
        result.metrics.append(entry)
        if log is not None:
            log(json.dumps(entry))

    result.best_dev_f1 = best_dev
    if out_path is not None:
        result.final_checkpoint = checkpoint("model.final.pt", step)
        if result.best_checkpoint is None:
            result.best_checkpoint = checkpoint("model.best.pt", step)
        with open(out_path / "metrics.jsonl", "w", encoding="utf-8") as handle:
            for entry in result.metrics:
                handle.write(json.dumps(entry) + "\n")
    return result


CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: Path | str,
    model: torch.nn.Module,
    encoder_config: EncoderConfig,
    vocab: Vocabulary,
    step: int = 0,
    seed: int | None = None,
) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "model": describe_model(model, encoder_config),
        "vocab_sha256": vocab.sha256,
        "state_dict": model.state_dict(),
        "step": step,
        "seed": seed,
    }
    torch.save(payload, path)


def load_checkpoint(path: Path | str, vocab: Vocabulary) -> tuple[torch.nn.Module, dict]:
    """Rebuild the model from a checkpoint; refuses on vocabulary-hash
    mismatch and on missing or unexpected tensors."""
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except TypeError:
        payload = torch.load(path, map_location="cpu")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {payload.get('version')}")
    if payload["vocab_sha256"] != vocab.sha256:
        raise CheckpointError(
            "vocabulary hash mismatch: checkpoint was built with a different vocabulary"
        )
    model = model_from_description(payload["model"])
    state = payload["state_dict"]
    missing, unexpected = model.load_state_dict(state, strict=False)
    if missing:
        raise CheckpointError(f"checkpoint is missing tensors: {sorted(missing)}")
    if unexpected:
        raise CheckpointError(f"checkpoint has unexpected tensors: {sorted(unexpected)}")
    meta = {k: payload[k] for k in ("version", "model", "vocab_sha256", "step", "seed")}
    return model, meta
