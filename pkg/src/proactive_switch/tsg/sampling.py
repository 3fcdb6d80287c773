"""Mixed top-K / nucleus sampling."""

from __future__ import annotations

from dataclasses import dataclass

import torch


@dataclass(frozen=True)
class SamplerConfig:
    top_k: int = 5
    top_p: float = 0.9
    seed: int = 0

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must be in (0, 1]")


# Decoding presets per response mode.
DECODE_PRESETS = {
    "chitchat": SamplerConfig(top_k=5, top_p=0.9),
    "task": SamplerConfig(top_k=10, top_p=0.5),
    "transition": SamplerConfig(top_k=5, top_p=0.9),
}


def filter_probs(logits: torch.Tensor, cfg: SamplerConfig) -> torch.Tensor:
    """Renormalized sampling distribution over the vocabulary.

    The top_k highest-probability tokens are kept first; nucleus truncation
    then keeps the smallest prefix of them reaching cumulative mass top_p.
    """
    if logits.dim() != 1:
        raise ValueError("filter_probs expects a (vocab,) logits vector")
    probs = torch.softmax(logits.to(torch.float64), dim=-1)
    k = min(cfg.top_k, probs.shape[0])
    top_probs, top_idx = torch.topk(probs, k)
    cumulative = torch.cumsum(top_probs, dim=0)
    keep = int((cumulative < cfg.top_p).sum()) + 1
    keep = min(keep, k)
    kept_idx = top_idx[:keep]
    out = torch.zeros_like(probs)
    out[kept_idx] = probs[kept_idx]
    return out / out.sum()


def sample_token(logits: torch.Tensor, cfg: SamplerConfig, generator: torch.Generator | None = None) -> int:
    """Draw one token id; top_k=1 degenerates to greedy decoding."""
    probs = filter_probs(logits, cfg)
    if cfg.top_k == 1:
        return int(probs.argmax())
    return int(torch.multinomial(probs, 1, generator=generator))
