"""Batching for slot-filling training examples."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from ..corpus import TrainingExample
from ..labels import Domain, Slot, TagDictionary
from ..tokenizer import Tokenizer

DOMAIN_INDEX = {d: i for i, d in enumerate(Domain)}
SLOT_INDEX = {s: i for i, s in enumerate(Slot)}


@dataclass
class TieBatch:
    tokens: torch.Tensor  # (B, N) long
    mask: torch.Tensor    # (B, N) bool
    tags: torch.Tensor    # (B, N) long, [PAD] tag at padded positions
    domain: torch.Tensor  # (B,) long
    slot: torch.Tensor    # (B,) long


def pad_batch(
    examples: list[TrainingExample],
    tokenizer: Tokenizer,
    tag_dict: TagDictionary | None = None,
) -> TieBatch:
    """Pad to the batch max length; padded positions carry the [PAD] tag."""
    if not examples:
        raise ValueError("empty batch")
    tag_dict = tag_dict or TagDictionary()
    N = max(len(e.token_ids) for e in examples)
    B = len(examples)
    tokens = torch.full((B, N), tokenizer.pad_id, dtype=torch.long)
    tags = torch.full((B, N), tag_dict.pad_index, dtype=torch.long)
    mask = torch.zeros(B, N, dtype=torch.bool)
    domain = torch.zeros(B, dtype=torch.long)
    slot = torch.zeros(B, dtype=torch.long)
    for i, e in enumerate(examples):
        n = len(e.token_ids)
        tokens[i, :n] = torch.tensor(e.token_ids, dtype=torch.long)
        tags[i, :n] = torch.tensor(e.tag_ids, dtype=torch.long)
        mask[i, :n] = True
        domain[i] = DOMAIN_INDEX[e.domain]
        slot[i] = SLOT_INDEX[e.slot]
    return TieBatch(tokens=tokens, mask=mask, tags=tags, domain=domain, slot=slot)
