"""Sequence encoders producing one hidden vector per input position.

Three variants share the head/loss stack:

* ``toy-transformer``: a small bidirectional transformer trained from
  scratch; default 2 layers, 4 heads, d_h=64, learned positional encodings,
  uniform +/-0.05 init. Desk-scale gradient and overfit tests run on it.
* ``pretrained-bidirectional-transformer``: a wrapper around an externally
  supplied pretrained checkpoint (loaded via the ``transformers`` package);
  the weights themselves are an input, never produced here.
* ``recurrent-plus-convolutional``: not an encoder in this sense; the
  Bi-LSTM/CNN model lives in ``relex.model`` and bypasses per-position
  hidden states.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import torch
from torch import nn

TOY = "toy-transformer"
PRETRAINED = "pretrained-bidirectional-transformer"
RECURRENT_CONV = "recurrent-plus-convolutional"

VARIANTS = (TOY, PRETRAINED, RECURRENT_CONV)


class EncoderLoadError(Exception):
    pass


@dataclass
class EncoderConfig:
    variant: str = TOY
    hidden_dim: int = 64
    layers: int = 2
    heads: int = 4
    ffn_dim: int = 128
    max_len: int = 128
    dropout_rate: float = 0.1
    vocab_size: int | None = None
    pretrained_path: str | None = None
    # recurrent-plus-convolutional settings (not taken from any reference)
    embedding_dim: int = 64
    conv_window: int = 3

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown encoder variant {self.variant!r}")
        if self.hidden_dim <= 0:
            raise ValueError("hidden_dim must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EncoderConfig":
        return cls(**data)


class ToyTransformerEncoder(nn.Module):
    """Small bidirectional transformer with learned positions and BERT-style
    segment embeddings."""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        if config.vocab_size is None:
            raise ValueError("toy encoder requires vocab_size")
        self.config = config
        d = config.hidden_dim
        self.token_embedding = nn.Embedding(config.vocab_size, d)
        self.position_embedding = nn.Embedding(config.max_len, d)
        self.segment_embedding = nn.Embedding(2, d)
        self.norm = nn.LayerNorm(d)
        self.dropout = nn.Dropout(config.dropout_rate)
        self.layers = nn.ModuleList(
            nn.TransformerEncoderLayer(
                d_model=d,
                nhead=config.heads,
                dim_feedforward=config.ffn_dim,
                dropout=config.dropout_rate,
                activation="gelu",
                batch_first=True,
            )
            for _ in range(config.layers)
        )
        self._init_uniform()

    def _init_uniform(self, scale: float = 0.05) -> None:
        for param in self.parameters():
            nn.init.uniform_(param, -scale, scale)

    def forward(
        self,
        ids: torch.Tensor,
        attention_mask: torch.Tensor,
        segment_ids: torch.Tensor,
    ) -> torch.Tensor:
        positions = torch.arange(ids.shape[1], device=ids.device).unsqueeze(0)
        h = (
            self.token_embedding(ids)
            + self.position_embedding(positions)
            + self.segment_embedding(segment_ids)
        )
        h = self.dropout(self.norm(h))
        padding = attention_mask == 0
        for layer in self.layers:
            h = layer(h, src_key_padding_mask=padding)
        return h


class PretrainedTransformerEncoder(nn.Module):
    """Wrapper over an externally supplied pretrained bidirectional
    transformer checkpoint (uncased)."""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        if not config.pretrained_path:
            raise EncoderLoadError(
                "pretrained variant requires pretrained_path pointing at a "
                "local checkpoint directory"
            )
        try:
            from transformers import AutoModel
        except ImportError as err:
            raise EncoderLoadError(
                "the 'transformers' package is required for the pretrained "
                "variant (pip install relex[pretrained])"
            ) from err
        try:
            self.inner = AutoModel.from_pretrained(config.pretrained_path)
        except Exception as err:
            raise EncoderLoadError(
                f"cannot load pretrained weights from {config.pretrained_path}: {err}"
            ) from err
        found = int(self.inner.config.hidden_size)
        if found != config.hidden_dim:
            raise EncoderLoadError(
                f"checkpoint hidden size {found} does not match configured "
                f"hidden_dim {config.hidden_dim}"
            )
        if config.vocab_size is not None and config.vocab_size != self.inner.config.vocab_size:
            self.inner.resize_token_embeddings(config.vocab_size)
        self.config = config

    def forward(self, ids, attention_mask, segment_ids):
        output = self.inner(
            input_ids=ids, attention_mask=attention_mask, token_type_ids=segment_ids
        )
        return output.last_hidden_state


def build_encoder(config: EncoderConfig) -> nn.Module:
    if config.variant == TOY:
        return ToyTransformerEncoder(config)
    if config.variant == PRETRAINED:
        return PretrainedTransformerEncoder(config)
    raise ValueError(
        f"variant {config.variant!r} does not produce per-position hidden states"
    )
