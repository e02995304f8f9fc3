"""Relation representation heads, classifier, and the Other-excluding
ranking loss.

The encoder output H feeds four heads:

* aggregate:  H0' = W0 tanh(H0) + b0                      (row 0, [CLS])
* entities:   He  = We tanh(mean of entity rows) + be     (We/be shared)
* indicator:  z   = Wz tanh(mean of indicator rows) + bz

fused as r = W2 (W1 concat(H0', He1, He2, z) + b1) + b2 -- two affine maps
with no intervening nonlinearity -- then dropout and a softmax layer give
p(y|x). The batch loss is

    L = - sum log p(y+) - beta * sum log(1 - p(y-)) + lambda * ||W_heads||^2

where y- is the highest-probability incorrect, non-Other class for each
instance and instances whose gold label is Other contribute no positive
term. Entity spans exclude the marker rows themselves by default; the
indicator span excludes the '#' and '$' rows. Both readings are flippable
via constructor flags.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .corpus import N_LABELS, OTHER_ID
from .encoders import (
    RECURRENT_CONV,
    EncoderConfig,
    build_encoder,
)
from .sequencing import AggregateSequence, EncodedExample

MODES = ("both", "sentence", "indicator")
NONBERT_MODES = ("both", "sentence", "indicator", "sentence-twice")

_EPS = 1e-12


@dataclass
class LossConfig:
    beta: float = 5.0
    l2_lambda: float = 5e-3
    other_id: int = OTHER_ID

    def __post_init__(self):
        if self.beta < 0 or self.l2_lambda < 0:
            raise ValueError("beta and l2_lambda must be nonnegative")


def masked_mean(h: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Mean of the rows of h selected by mask, per batch element."""
    counts = mask.sum(dim=1)
    if (counts == 0).any():
        raise ValueError("empty span: cannot average zero rows")
    weights = mask.to(h.dtype).unsqueeze(-1)
    return (weights * h).sum(dim=1) / counts.unsqueeze(-1).to(h.dtype)


def select_negative_class(
    probs: torch.Tensor, gold: torch.Tensor, other_id: int = OTHER_ID
) -> torch.Tensor:
    """Highest-probability class excluding the gold label and Other.

    Ties break toward the smallest label id.
    """
    p = probs.detach().cpu().numpy().copy()
    if p.ndim == 1:
        p = p[None, :]
    g = np.atleast_1d(gold.detach().cpu().numpy() if torch.is_tensor(gold) else np.asarray(gold))
    p[np.arange(len(p)), g] = -1.0
    p[:, other_id] = -1.0
    return torch.from_numpy(np.argmax(p, axis=1)).long()


def compute_loss(
    probs: torch.Tensor,
    gold: torch.Tensor,
    y_neg: torch.Tensor,
    reg_weights: Sequence[torch.Tensor],
    cfg: LossConfig,
) -> torch.Tensor:
    """Batch ranking loss; probabilities are clamped to [1e-12, 1-1e-12]
    inside the logs."""
    batch = torch.arange(probs.shape[0], device=probs.device)
    p_pos = probs[batch, gold].clamp(_EPS, 1.0 - _EPS)
    p_neg = probs[batch, y_neg].clamp(_EPS, 1.0 - _EPS)
    pos_mask = (gold != cfg.other_id).to(probs.dtype)
    loss = -(torch.log(p_pos) * pos_mask).sum()
    loss = loss - cfg.beta * torch.log(1.0 - p_neg).sum()
    if cfg.l2_lambda:
        loss = loss + cfg.l2_lambda * sum((w * w).sum() for w in reg_weights)
    return loss


def collate_examples(
    examples: Sequence[EncodedExample],
    include_marker_rows: bool = False,
    include_indicator_markers: bool = False,
) -> dict:
    """Stack encoded examples into model-ready tensors.

    Span masks follow the configured marker handling: entity spans widen to
    the marker rows when include_marker_rows is set; the indicator mask
    keeps the '#'/'$' rows when include_indicator_markers is set.
    """
    n = len(examples)
    length = len(examples[0].sequence.ids)
    ids = torch.zeros((n, length), dtype=torch.long)
    mask = torch.zeros((n, length), dtype=torch.long)
    segments = torch.zeros((n, length), dtype=torch.long)
    e1_mask = torch.zeros((n, length), dtype=torch.bool)
    e2_mask = torch.zeros((n, length), dtype=torch.bool)
    ind_mask = torch.zeros((n, length), dtype=torch.bool)
    sent_mask = torch.zeros((n, length), dtype=torch.bool)
    labels = torch.zeros(n, dtype=torch.long)

    for i, example in enumerate(examples):
        seq = example.sequence
        ids[i] = torch.tensor(seq.ids, dtype=torch.long)
        mask[i] = torch.tensor(seq.attention_mask, dtype=torch.long)
        segments[i] = torch.tensor(seq.segment_ids, dtype=torch.long)
        if include_marker_rows and seq.m is not None:
            e1_mask[i, seq.m : seq.n + 1] = True
            e2_mask[i, seq.p : seq.q + 1] = True
        else:
            e1_mask[i, seq.e1_span.start : seq.e1_span.stop] = True
            e2_mask[i, seq.e2_span.start : seq.e2_span.stop] = True
        if seq.indicator_span is not None:
            ind_mask[i, seq.indicator_span.start : seq.indicator_span.stop] = True
            if not include_indicator_markers:
                ind_mask[i, seq.hash_index] = False
                ind_mask[i, seq.dollar_index] = False
        if seq.m is not None:
            if seq.indicator_span is not None:
                first_sep = seq.indicator_span.start - 1
            else:
                first_sep = int(sum(seq.attention_mask)) - 1
            sent_mask[i, 1:first_sep] = True
        labels[i] = example.label_id

    return {
        "ids": ids,
        "attention_mask": mask,
        "segment_ids": segments,
        "e1_mask": e1_mask,
        "e2_mask": e2_mask,
        "indicator_mask": ind_mask,
        "sentence_mask": sent_mask,
        "labels": labels,
        "instance_ids": [ex.instance_id for ex in examples],
    }


class RelationModel(nn.Module):
    """Encoder plus the four representation heads and softmax classifier."""

    def __init__(
        self,
        encoder: nn.Module,
        hidden_dim: int,
        n_labels: int = N_LABELS,
        mode: str = "both",
        dropout: float = 0.1,
        include_marker_rows: bool = False,
        include_indicator_markers: bool = False,
    ):
        super().__init__()
        if mode not in MODES:
            raise ValueError(f"unknown input mode {mode!r}")
        self.encoder = encoder
        self.hidden_dim = hidden_dim
        self.n_labels = n_labels
        self.mode = mode
        self.include_marker_rows = include_marker_rows
        self.include_indicator_markers = include_indicator_markers

        d = hidden_dim
        self.w0 = nn.Linear(d, d)
        self.we = nn.Linear(d, d)  # shared by both entity heads
        self.wz = nn.Linear(d, d) if mode != "sentence" else None
        n_parts = 3 if mode == "sentence" else 4
        self.w1 = nn.Linear(n_parts * d, d)
        self.w2 = nn.Linear(d, d)
        self.classifier = nn.Linear(d, n_labels)
        self.dropout = nn.Dropout(dropout)

    def encode(self, batch: dict) -> torch.Tensor:
        return self.encoder(batch["ids"], batch["attention_mask"], batch["segment_ids"])

    def aggregate_head(self, h0: torch.Tensor) -> torch.Tensor:
        return self.w0(torch.tanh(h0))

    def entity_head(self, h: torch.Tensor, span_mask: torch.Tensor) -> torch.Tensor:
        return self.we(torch.tanh(masked_mean(h, span_mask)))

    def indicator_head(self, h: torch.Tensor, span_mask: torch.Tensor) -> torch.Tensor:
        if self.wz is None:
            raise RuntimeError("indicator head is disabled in sentence-only mode")
        return self.wz(torch.tanh(masked_mean(h, span_mask)))

    def fuse(self, parts: Sequence[torch.Tensor]) -> torch.Tensor:
        return self.w2(self.w1(torch.cat(list(parts), dim=-1)))

    def classify(self, r: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.classifier(self.dropout(r)), dim=-1)

    def forward(self, batch: dict) -> torch.Tensor:
        h = self.encode(batch)
        h0p = self.aggregate_head(h[:, 0, :])
        he1 = self.entity_head(h, batch["e1_mask"])
        he2 = self.entity_head(h, batch["e2_mask"])
        parts = [h0p, he1, he2]
        if self.mode != "sentence":
            parts.append(self.indicator_head(h, batch["indicator_mask"]))
        return self.classify(self.fuse(parts))

    def head_parameters(self) -> dict[str, torch.Tensor]:
        named = {
            "w0.weight": self.w0.weight, "w0.bias": self.w0.bias,
            "we.weight": self.we.weight, "we.bias": self.we.bias,
            "w1.weight": self.w1.weight, "w1.bias": self.w1.bias,
            "w2.weight": self.w2.weight, "w2.bias": self.w2.bias,
            "classifier.weight": self.classifier.weight,
            "classifier.bias": self.classifier.bias,
        }
        if self.wz is not None:
            named["wz.weight"] = self.wz.weight
            named["wz.bias"] = self.wz.bias
        return named

    def regularized_weights(self) -> list[torch.Tensor]:
        weights = [self.w0.weight, self.we.weight, self.w1.weight, self.w2.weight,
                   self.classifier.weight]
        if self.wz is not None:
            weights.append(self.wz.weight)
        return weights

    def loss(self, probs: torch.Tensor, gold: torch.Tensor, cfg: LossConfig) -> torch.Tensor:
        y_neg = select_negative_class(probs, gold, cfg.other_id)
        return compute_loss(probs, gold, y_neg, self.regularized_weights(), cfg)


class RecurrentConvolutionalModel(nn.Module):
    """Bi-LSTM over the sentence plus CNN over the indicator, fused and fed
    to the same classifier/loss path as the transformer model.

    Filter width, embedding size, and recurrent dimensions are local
    defaults, not taken from any reference.
    """

    def __init__(
        self,
        config: EncoderConfig,
        n_labels: int = N_LABELS,
        mode: str = "both",
        dropout: float = 0.1,
    ):
        super().__init__()
        if config.variant != RECURRENT_CONV:
            raise ValueError("config variant must be recurrent-plus-convolutional")
        if mode not in NONBERT_MODES:
            raise ValueError(f"unknown non-BERT mode {mode!r}")
        if config.vocab_size is None:
            raise ValueError("recurrent-plus-convolutional model requires vocab_size")
        if config.hidden_dim % 2:
            raise ValueError("hidden_dim must be even (split across LSTM directions)")
        self.config = config
        self.mode = mode
        self.hidden_dim = config.hidden_dim
        self.n_labels = n_labels
        self.embedding = nn.Embedding(config.vocab_size, config.embedding_dim)
        self.lstm = nn.LSTM(
            config.embedding_dim,
            config.hidden_dim // 2,
            batch_first=True,
            bidirectional=True,
        )
        self.conv = nn.Conv1d(config.embedding_dim, config.hidden_dim, config.conv_window)
        self.fuse_layer = nn.Linear(2 * config.hidden_dim, config.hidden_dim)
        self.classifier = nn.Linear(config.hidden_dim, n_labels)
        self.dropout = nn.Dropout(dropout)

    def _gather(self, batch: dict, mask_key: str) -> tuple[torch.Tensor, torch.Tensor]:
        """Embed the masked positions into a left-aligned padded batch."""
        ids = batch["ids"]
        mask = batch[mask_key]
        lengths = mask.sum(dim=1)
        max_len = max(int(lengths.max()), self.config.conv_window)
        gathered = torch.zeros(
            (ids.shape[0], max_len), dtype=torch.long, device=ids.device
        )
        for i in range(ids.shape[0]):
            row = ids[i][mask[i]]
            gathered[i, : row.shape[0]] = row
        return self.embedding(gathered), lengths

    def encode_sentence_recurrent(
        self, embedded: torch.Tensor, lengths: torch.Tensor
    ) -> torch.Tensor:
        packed = nn.utils.rnn.pack_padded_sequence(
            embedded, lengths.cpu().clamp(min=1), batch_first=True, enforce_sorted=False
        )
        _, (h_n, _) = self.lstm(packed)
        return torch.cat([h_n[0], h_n[1]], dim=-1)

    def encode_indicator_convolutional(
        self, embedded: torch.Tensor, lengths: torch.Tensor
    ) -> torch.Tensor:
        # embedded is already padded to >= conv_window
        features = torch.relu(self.conv(embedded.transpose(1, 2)))  # (B, d, T)
        steps = torch.arange(features.shape[2], device=features.device)
        valid_steps = (lengths - self.config.conv_window + 1).clamp(min=1)
        valid = steps.unsqueeze(0) < valid_steps.unsqueeze(1)
        features = features.masked_fill(~valid.unsqueeze(1), 0.0)
        return features.max(dim=2).values

    def fuse_nonbert(self, context: torch.Tensor, feature: torch.Tensor) -> torch.Tensor:
        return self.fuse_layer(torch.cat([context, feature], dim=-1))

    def classify(self, r: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.classifier(self.dropout(r)), dim=-1)

    def forward(self, batch: dict) -> torch.Tensor:
        n = batch["ids"].shape[0]
        d = self.hidden_dim
        dev = batch["ids"].device
        dtype = self.embedding.weight.dtype
        if self.mode in ("both", "sentence", "sentence-twice"):
            sent_emb, sent_len = self._gather(batch, "sentence_mask")
            context = self.encode_sentence_recurrent(sent_emb, sent_len)
        else:
            context = torch.zeros((n, d), device=dev, dtype=dtype)
        if self.mode in ("both", "indicator"):
            ind_emb, ind_len = self._gather(batch, "indicator_mask")
            feature = self.encode_indicator_convolutional(ind_emb, ind_len)
        elif self.mode == "sentence-twice":
            sent_emb, sent_len = self._gather(batch, "sentence_mask")
            feature = self.encode_indicator_convolutional(sent_emb, sent_len)
        else:
            feature = torch.zeros((n, d), device=dev, dtype=dtype)
        return self.classify(self.fuse_nonbert(context, feature))

    def regularized_weights(self) -> list[torch.Tensor]:
        return [self.fuse_layer.weight, self.classifier.weight]

    def loss(self, probs: torch.Tensor, gold: torch.Tensor, cfg: LossConfig) -> torch.Tensor:
        y_neg = select_negative_class(probs, gold, cfg.other_id)
        return compute_loss(probs, gold, y_neg, self.regularized_weights(), cfg)


def build_model(
    encoder_config: EncoderConfig,
    mode: str = "both",
    n_labels: int = N_LABELS,
    dropout: float = 0.1,
    include_marker_rows: bool = False,
    include_indicator_markers: bool = False,
) -> nn.Module:
    if encoder_config.variant == RECURRENT_CONV:
        return RecurrentConvolutionalModel(
            encoder_config, n_labels=n_labels, mode=mode, dropout=dropout
        )
    encoder = build_encoder(encoder_config)
    return RelationModel(
        encoder,
        hidden_dim=encoder_config.hidden_dim,
        n_labels=n_labels,
        mode=mode,
        dropout=dropout,
        include_marker_rows=include_marker_rows,
        include_indicator_markers=include_indicator_markers,
    )


def describe_model(model: nn.Module, encoder_config: EncoderConfig) -> dict:
    desc = {
        "encoder": encoder_config.to_dict(),
        "mode": model.mode,
        "n_labels": model.n_labels,
        "dropout": float(model.dropout.p),
    }
    if isinstance(model, RelationModel):
        desc["include_marker_rows"] = model.include_marker_rows
        desc["include_indicator_markers"] = model.include_indicator_markers
    return desc


def model_from_description(desc: dict) -> nn.Module:
    config = EncoderConfig.from_dict(desc["encoder"])
    return build_model(
        config,
        mode=desc["mode"],
        n_labels=desc["n_labels"],
        dropout=desc["dropout"],
        include_marker_rows=desc.get("include_marker_rows", False),
        include_indicator_markers=desc.get("include_indicator_markers", False),
    )
