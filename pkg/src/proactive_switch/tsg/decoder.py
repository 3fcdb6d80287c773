"""Compact causal decoder with optional bottleneck adapters.

The base decoder is a standard pre-LN causal transformer LM. Adapters follow
the bottleneck design (LayerNorm -> down-projection -> nonlinearity ->
up-projection -> residual) with a zero-initialized up-projection, so a freshly
extended model computes exactly the base model's function. The houlsby variant
installs two adapters per layer (post-attention and post-feed-forward); the
pfeiffer variant installs only the post-feed-forward one. Passing
use_adapters=False skips the adapter modules entirely, reproducing the base
model's hidden states bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from ..nn_utils import MultiHeadSelfAttention, feed_forward, init_uniform_scaled, sinusoidal_positions

VARIANT_HOULSBY = "houlsby"
VARIANT_PFEIFFER = "pfeiffer"


@dataclass
class DecoderConfig:
    vocab_size: int
    d_model: int = 128
    layers: int = 2
    heads: int = 4
    ffn_mult: int = 4
    dropout: float = 0.1
    max_len: int = 256
    max_context_turns: int = 3

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
            "max_context_turns": self.max_context_turns,
        }


@dataclass(frozen=True)
class AdapterConfig:
    variant: str = VARIANT_HOULSBY
    bottleneck: int = 16
    nonlinearity: str = "gelu"

    def __post_init__(self) -> None:
        if self.variant not in (VARIANT_HOULSBY, VARIANT_PFEIFFER):
            raise ValueError(f"unknown adapter variant {self.variant!r}")
        if self.bottleneck < 1:
            raise ValueError("bottleneck dim must be positive")
        if self.nonlinearity not in ("relu", "gelu"):
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")

    def as_dict(self) -> dict:
        return {"variant": self.variant, "bottleneck": self.bottleneck, "nonlinearity": self.nonlinearity}


class Adapter(nn.Module):
    def __init__(self, d_model: int, cfg: AdapterConfig):
        super().__init__()
        self.norm = nn.LayerNorm(d_model)
        self.down = nn.Linear(d_model, cfg.bottleneck)
        self.act = nn.GELU() if cfg.nonlinearity == "gelu" else nn.ReLU()
        self.up = nn.Linear(cfg.bottleneck, d_model)
        nn.init.normal_(self.down.weight, std=1e-2)
        nn.init.zeros_(self.down.bias)
        # Zero-init up-projection: the extended model starts at the base model.
        nn.init.zeros_(self.up.weight)
        nn.init.zeros_(self.up.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.up(self.act(self.down(self.norm(x))))


class DecoderLayer(nn.Module):
    def __init__(self, cfg: DecoderConfig):
        super().__init__()
        self.norm1 = nn.LayerNorm(cfg.d_model)
        self.attn = MultiHeadSelfAttention(cfg.d_model, cfg.heads)
        self.norm2 = nn.LayerNorm(cfg.d_model)
        self.ffn = feed_forward(cfg.d_model, cfg.ffn_mult)
        self.drop = nn.Dropout(cfg.dropout)
        self.attn_adapter: Adapter | None = None
        self.ffn_adapter: Adapter | None = None

    def forward(
        self,
        h: torch.Tensor,
        attn_bias: torch.Tensor,
        use_adapters: bool,
        cache: dict | None = None,
    ) -> torch.Tensor:
        h = h + self.drop(self.attn(self.norm1(h), attn_bias, cache))
        if use_adapters and self.attn_adapter is not None:
            h = self.attn_adapter(h)
        h = h + self.drop(self.ffn(self.norm2(h)))
        if use_adapters and self.ffn_adapter is not None:
            h = self.ffn_adapter(h)
        return h


def is_extension_param(name: str) -> bool:
    """Parameters belonging to the transition extension (not the frozen base)."""
    return ".attn_adapter." in name or ".ffn_adapter." in name or name.startswith("prompt_")


class TransitionDecoder(nn.Module):
    def __init__(self, cfg: DecoderConfig):
        super().__init__()
        self.cfg = cfg
        self.adapter_cfg: AdapterConfig | None = None
        self.prompt_embed: nn.Embedding | None = None
        self.prompt_token_ids: list[int] = []
        self.embed = nn.Embedding(cfg.vocab_size, cfg.d_model)
        self.register_buffer("positions", sinusoidal_positions(cfg.max_len, cfg.d_model))
        causal = torch.full((cfg.max_len, cfg.max_len), float("-inf"))
        self.register_buffer("causal_bias", torch.triu(causal, diagonal=1))
        self.layers = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.layers))
        self.final_norm = nn.LayerNorm(cfg.d_model)
        self.lm_head = nn.Linear(cfg.d_model, cfg.vocab_size)
        self.drop = nn.Dropout(cfg.dropout)
        init_uniform_scaled(self, cfg.d_model)
        # Weight tying: shared input/output embedding makes token copying from
        # the prompt a one-hop attention circuit.
        self.lm_head.weight = self.embed.weight

    def add_adapters(self, adapter_cfg: AdapterConfig, prompt_token_ids: list[int] | None = None) -> None:
        """Install the transition extension: adapters plus optional trainable
        embedding deltas for prompt-syntax tokens the base never saw.

        Both start as exact identities (zero-init), so the extended model
        computes the base function until trained.
        """
        if self.adapter_cfg is not None:
            if self.adapter_cfg != adapter_cfg:
                raise ValueError(
                    f"model already carries {self.adapter_cfg.variant!r} adapters; "
                    f"cannot install {adapter_cfg.variant!r}"
                )
            return
        for layer in self.layers:
            if adapter_cfg.variant == VARIANT_HOULSBY:
                layer.attn_adapter = Adapter(self.cfg.d_model, adapter_cfg)
            layer.ffn_adapter = Adapter(self.cfg.d_model, adapter_cfg)
        if prompt_token_ids:
            slots = torch.full((self.cfg.vocab_size,), -1, dtype=torch.long)
            for i, token_id in enumerate(prompt_token_ids):
                slots[token_id] = i
            self.register_buffer("prompt_slots", slots)
            self.prompt_embed = nn.Embedding(len(prompt_token_ids), self.cfg.d_model)
            nn.init.zeros_(self.prompt_embed.weight)
            self.prompt_token_ids = list(prompt_token_ids)
        else:
            self.prompt_token_ids = []
        self.adapter_cfg = adapter_cfg

    def new_cache(self) -> list[dict]:
        """Per-layer key/value cache for incremental decoding."""
        return [{} for _ in self.layers]

    def forward(
        self,
        tokens: torch.Tensor,
        use_adapters: bool = True,
        cache: list[dict] | None = None,
    ) -> torch.Tensor:
        """Next-token logits; with a cache, tokens holds only the new positions."""
        B, N = tokens.shape
        past = cache[0]["k"].shape[2] if cache and cache[0] else 0
        if past + N > self.cfg.max_len:
            raise ValueError(f"input length {past + N} exceeds max length {self.cfg.max_len}")
        h = self.embed(tokens) * math.sqrt(self.cfg.d_model) + self.positions[past : past + N].to(
            self.embed.weight.dtype
        )
        if use_adapters and self.prompt_embed is not None:
            slots = self.prompt_slots[tokens]
            keep = (slots >= 0).unsqueeze(-1).to(h.dtype)
            h = h + keep * self.prompt_embed(slots.clamp(min=0))
        h = self.drop(h)
        # Queries see the full cached prefix plus the causal block over new positions.
        block = self.causal_bias[:N, :N].to(h.dtype)
        if past:
            bias = torch.cat([torch.zeros(N, past, dtype=h.dtype), block], dim=1)
        else:
            bias = block
        for i, layer in enumerate(self.layers):
            h = layer(h, bias, use_adapters, cache[i] if cache is not None else None)
        return self.lm_head(self.final_norm(h))

    # --- parameter banks ---------------------------------------------------

    def base_parameters(self):
        for name, p in self.named_parameters():
            if not is_extension_param(name):
                yield p

    def extension_parameters(self):
        """Trainable extension: adapter modules plus prompt embedding deltas."""
        for name, p in self.named_parameters():
            if is_extension_param(name):
                yield p

    def base_state_dict(self) -> dict[str, torch.Tensor]:
        return {k: v for k, v in self.state_dict().items() if not is_extension_param(k)}

    def extension_state_dict(self) -> dict[str, torch.Tensor]:
        return {k: v for k, v in self.state_dict().items() if is_extension_param(k)}

    def adapter_param_count(self) -> int:
        """Bottleneck-adapter parameters only (excludes prompt embeddings)."""
        return sum(
            p.numel()
            for name, p in self.named_parameters()
            if ".attn_adapter." in name or ".ffn_adapter." in name
        )

    def trainable_fraction(self) -> float:
        trainable = sum(p.numel() for p in self.parameters() if p.requires_grad)
        return trainable / sum(p.numel() for p in self.parameters())

    def freeze_base(self) -> None:
        for p in self.base_parameters():
            p.requires_grad_(False)
