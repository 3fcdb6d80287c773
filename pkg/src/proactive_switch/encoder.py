"""Compact bidirectional transformer encoder over word tokens.

Produces per-token hidden states plus the position-0 summary vector used by
the classification heads. Fixed sinusoidal positions and strict key masking
keep eval-mode outputs deterministic and independent of pad content.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from .nn_utils import (
    MultiHeadSelfAttention,
    feed_forward,
    init_uniform_scaled,
    padding_attn_bias,
    sinusoidal_positions,
)


@dataclass
class EncoderConfig:
    vocab_size: int
    d_model: int = 128
    layers: int = 2
    heads: int = 4
    ffn_mult: int = 4
    dropout: float = 0.1
    max_len: int = 256

    def __post_init__(self) -> None:
        if self.d_model % self.heads != 0:
            raise ValueError("d_model must be divisible by heads")

    def as_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "d_model": self.d_model,
            "layers": self.layers,
            "heads": self.heads,
            "ffn_mult": self.ffn_mult,
            "dropout": self.dropout,
            "max_len": self.max_len,
        }


@dataclass
class EncoderOutput:
    h_cls: torch.Tensor    # (B, d_model)
    h_tokens: torch.Tensor  # (B, N, d_model)


class EncoderLayer(nn.Module):
    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.d_model)
        self.attn = MultiHeadSelfAttention(cfg.d_model, cfg.heads)
        self.norm2 = nn.LayerNorm(cfg.d_model)
        self.ffn = feed_forward(cfg.d_model, cfg.ffn_mult)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, h: torch.Tensor, attn_bias: torch.Tensor) -> torch.Tensor:
        h = h + self.drop(self.attn(self.norm1(h), attn_bias))
        h = h + self.drop(self.ffn(self.norm2(h)))
        return h


class TextEncoder(nn.Module):
    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.cfg = cfg
        self.embed = nn.Embedding(cfg.vocab_size, cfg.d_model)
        self.register_buffer("positions", sinusoidal_positions(cfg.max_len, cfg.d_model))
        self.layers = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.layers))
        self.final_norm = nn.LayerNorm(cfg.d_model)
        self.drop = nn.Dropout(cfg.dropout)
        init_uniform_scaled(self, cfg.d_model)

    def forward(self, tokens: torch.Tensor, mask: torch.Tensor) -> EncoderOutput:
        B, N = tokens.shape
        if N > self.cfg.max_len:
            raise ValueError(f"input length {N} exceeds max length {self.cfg.max_len}")
        if mask.shape != tokens.shape:
            raise ValueError("mask must align with tokens")
        # sqrt(d) keeps token content on the same scale as the position table
        h = self.embed(tokens) * math.sqrt(self.cfg.d_model) + self.positions[:N].to(self.embed.weight.dtype)
        h = self.drop(h)
        bias = padding_attn_bias(mask, h.dtype)
        for layer in self.layers:
            h = layer(h, bias)
        h = self.final_norm(h)
        return EncoderOutput(h_cls=h[:, 0], h_tokens=h)

    @torch.no_grad()
    def encode(self, tokens: torch.Tensor, mask: torch.Tensor) -> EncoderOutput:
        """Deterministic eval-mode encoding."""
        was_training = self.training
        self.eval()
        try:
            return self.forward(tokens, mask)
        finally:
            if was_training:
                self.train()
