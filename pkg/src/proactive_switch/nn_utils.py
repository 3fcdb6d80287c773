"""Shared building blocks for the compact encoder/decoder models."""

from __future__ import annotations

import math

import torch
from torch import nn


def sinusoidal_positions(max_len: int, d_model: int) -> torch.Tensor:
    """Fixed sinusoidal position table (max_len, d_model)."""
    position = torch.arange(max_len, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(torch.arange(0, d_model, 2, dtype=torch.float64) * (-math.log(10000.0) / d_model))
    table = torch.zeros(max_len, d_model, dtype=torch.float64)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div)
    return table.to(torch.float32)


def init_uniform_scaled(module: nn.Module, d_model: int) -> None:
    """Uniform(-1/sqrt(d), 1/sqrt(d)) weights, zero biases, for Linear/Embedding."""
    bound = 1.0 / math.sqrt(d_model)
    for m in module.modules():
        if isinstance(m, nn.Linear):
            nn.init.uniform_(m.weight, -bound, bound)
            if m.bias is not None:
                nn.init.zeros_(m.bias)
        elif isinstance(m, nn.Embedding):
            nn.init.uniform_(m.weight, -bound, bound)


class MultiHeadSelfAttention(nn.Module):
    """Plain multi-head self-attention with an additive attention bias."""

    def __init__(self, d_model: int, heads: int):
        super().__init__()
        if d_model % heads != 0:
            raise ValueError("d_model must be divisible by heads")
        self.heads = heads
        self.head_dim = d_model // heads
        self.scale = 1.0 / math.sqrt(self.head_dim)
        self.q_proj = nn.Linear(d_model, d_model)
        self.k_proj = nn.Linear(d_model, d_model)
        self.v_proj = nn.Linear(d_model, d_model)
        self.out_proj = nn.Linear(d_model, d_model)

    def forward(
        self,
        h: torch.Tensor,
        attn_bias: torch.Tensor | None,
        cache: dict | None = None,
    ) -> torch.Tensor:
        """Attention over h (plus cached past keys/values when decoding).

        cache, when given, is a per-layer dict updated in place: queries come
        from h only, keys/values from the cached prefix plus h.
        """
        B, N, d = h.shape
        q = self.q_proj(h).view(B, N, self.heads, self.head_dim).transpose(1, 2)
        k = self.k_proj(h).view(B, N, self.heads, self.head_dim).transpose(1, 2)
        v = self.v_proj(h).view(B, N, self.heads, self.head_dim).transpose(1, 2)
        if cache is not None:
            if "k" in cache:
                k = torch.cat([cache["k"], k], dim=2)
                v = torch.cat([cache["v"], v], dim=2)
            cache["k"] = k
            cache["v"] = v
        scores = torch.matmul(q, k.transpose(-1, -2)) * self.scale
        if attn_bias is not None:
            scores = scores + attn_bias
        weights = torch.softmax(scores, dim=-1)
        out = torch.matmul(weights, v).transpose(1, 2).reshape(B, N, d)
        return self.out_proj(out)


def feed_forward(d_model: int, ffn_mult: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Linear(d_model, ffn_mult * d_model),
        nn.GELU(),
        nn.Linear(ffn_mult * d_model, d_model),
    )


def padding_attn_bias(mask: torch.Tensor, dtype: torch.dtype) -> torch.Tensor:
    """(B, 1, 1, N) additive bias: 0 at real tokens, -inf at padded keys.

    -inf (rather than a large negative) makes padded keys carry exactly zero
    attention weight, so pad content cannot perturb unmasked outputs.
    """
    bias = torch.zeros(mask.shape, dtype=dtype, device=mask.device)
    bias.masked_fill_(~mask.bool(), float("-inf"))
    return bias[:, None, None, :]
