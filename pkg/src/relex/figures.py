"""Figure rendering for the report paths.

Every report-producing command drops PNG figures next to its delimited
output: per-relation score bars for scoring runs, grouped comparison bars
for ablations, and loss/F1 curves for training runs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .corpus import RELATIONS
from .evaluation import AblationReport, ClassReport


def save_per_class_figure(report: ClassReport, path: Path | str, title: str = "Per-relation scores") -> Path:
    path = Path(path)
    x = np.arange(len(RELATIONS))
    width = 0.27
    fig, ax = plt.subplots(figsize=(10, 4.5))
    for offset, (name, values) in enumerate(
        (
            ("precision", [report.rows[r].precision for r in RELATIONS]),
            ("recall", [report.rows[r].recall for r in RELATIONS]),
            ("F1", [report.rows[r].f1 for r in RELATIONS]),
        )
    ):
        ax.bar(x + (offset - 1) * width, values, width, label=name)
    ax.axhline(report.macro_f1, color="gray", linestyle="--", linewidth=1,
               label=f"macro-F1 = {report.macro_f1:.2f}")
    ax.set_xticks(x)
    ax.set_xticklabels(RELATIONS, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("percent")
    ax.set_ylim(0, 105)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_comparison_figure(
    base: ClassReport,
    new: ClassReport,
    names: tuple[str, str],
    path: Path | str,
) -> Path:
    path = Path(path)
    x = np.arange(len(RELATIONS))
    width = 0.38
    fig, ax = plt.subplots(figsize=(10, 4.5))
    ax.bar(x - width / 2, [base.rows[r].f1 for r in RELATIONS], width, label=names[0])
    ax.bar(x + width / 2, [new.rows[r].f1 for r in RELATIONS], width, label=names[1])
    ax.set_xticks(x)
    ax.set_xticklabels(RELATIONS, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("F1 (percent)")
    ax.set_ylim(0, 105)
    ax.set_title("Per-relation F1 comparison")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_ablation_figure(report: AblationReport, path: Path | str) -> Path:
    path = Path(path)
    names = [row.name for row in report.rows]
    scores = [row.macro_f1 for row in report.rows]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.barh(range(len(names)), scores, color="steelblue")
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("macro-F1 (percent)")
    ax.set_xlim(0, 100)
    ax.set_title(f"Ablation: {report.variant}")
    for i, score in enumerate(scores):
        ax.text(score + 1, i, f"{score:.2f}", va="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_training_curves(metrics: Sequence[dict], path: Path | str) -> Path:
    path = Path(path)
    epochs = [m["epoch"] for m in metrics]
    losses = [m["train_loss"] for m in metrics]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(epochs, losses, marker="o", label="train loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    dev = [(m["epoch"], m["dev_macro_f1"]) for m in metrics if m.get("dev_macro_f1") is not None]
    if dev:
        twin = ax.twinx()
        twin.plot([e for e, _ in dev], [f for _, f in dev], marker="s",
                  color="darkorange", label="dev macro-F1")
        twin.set_ylabel("dev macro-F1 (percent)")
        twin.set_ylim(0, 105)
    ax.set_title("Training curves")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
