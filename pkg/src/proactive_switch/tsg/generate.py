"""Autoregressive generation."""

from __future__ import annotations

import logging

import torch

from ..tokenizer import END_TOKEN, TRANSITION_TOKEN, Tokenizer
from .decoder import TransitionDecoder
from .sampling import SamplerConfig, sample_token

log = logging.getLogger(__name__)


@torch.no_grad()
def generate_ids(
    model: TransitionDecoder,
    input_ids: list[int],
    sampler: SamplerConfig,
    end_id: int,
    use_adapters: bool = True,
    max_new_tokens: int = 40,
    generator: torch.Generator | None = None,
) -> list[int]:
    """Sample continuation ids until [END] or the budget runs out."""
    was_training = model.training
    model.eval()
    try:
        generated: list[int] = []
        limit = min(max_new_tokens, model.cfg.max_len - len(input_ids))
        if limit <= 0:
            return generated
        cache = model.new_cache()
        logits = model(torch.tensor([input_ids], dtype=torch.long), use_adapters=use_adapters, cache=cache)
        for _ in range(limit):
            token = sample_token(logits[0, -1], sampler, generator)
            generated.append(token)
            if token == end_id:
                break
            logits = model(torch.tensor([[token]], dtype=torch.long), use_adapters=use_adapters, cache=cache)
        return generated
    finally:
        if was_training:
            model.train()


def generate_text(
    model: TransitionDecoder,
    tokenizer: Tokenizer,
    input_text: str,
    sampler: SamplerConfig,
    use_adapters: bool = True,
    max_new_tokens: int = 40,
    generator: torch.Generator | None = None,
) -> str:
    """Generate a response string; [END] is stripped, [TRANSITION] is kept."""
    ids = generate_ids(
        model,
        tokenizer.encode(input_text),
        sampler,
        end_id=tokenizer.end_id,
        use_adapters=use_adapters,
        max_new_tokens=max_new_tokens,
        generator=generator,
    )
    tokens = [tokenizer.id_to_token(i) for i in ids if i != tokenizer.end_id]
    return " ".join(tokens)


def split_transition_response(text: str) -> tuple[str, str | None]:
    """(normal response, transition sentence or None).

    Splits on the first transition marker; anything after a second marker is
    discarded (and logged).
    """
    if TRANSITION_TOKEN not in text:
        return text.strip(), None
    before, after = text.split(TRANSITION_TOKEN, 1)
    if TRANSITION_TOKEN in after:
        log.warning("generation contained multiple transition markers; truncating: %r", text)
        after = after.split(TRANSITION_TOKEN, 1)[0]
    return before.strip(), after.strip()
