"""Transition info extractor: joint domain/slot heads plus CRF slot filling."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn.functional as F
from torch import nn

from ..encoder import EncoderConfig, EncoderOutput, TextEncoder
from ..labels import Domain, Slot, TagDictionary, TransitionInfo, iob_spans, pair_name
from ..tokenizer import Tokenizer
from .crf_layer import CrfLayer

DOMAINS = tuple(Domain)
SLOTS = tuple(Slot)

MODE_WITH_CRF = "with_crf"
MODE_WITHOUT_CRF = "without_crf"


@dataclass
class TieConfig:
    use_crf: bool = True
    use_slot_filling: bool = True

    def as_dict(self) -> dict:
        return {"use_crf": self.use_crf, "use_slot_filling": self.use_slot_filling}


@dataclass
class TieOutput:
    """Extraction result for one input sequence."""

    info: TransitionInfo
    domain_probs: list[float]
    slot_probs: list[float]
    tag_path: list[str]
    path_score: float
    flags: list[str] = field(default_factory=list)


class TieModel(nn.Module):
    def __init__(self, encoder_cfg: EncoderConfig, tie_cfg: TieConfig | None = None):
        super().__init__()
        self.encoder_cfg = encoder_cfg
        self.tie_cfg = tie_cfg or TieConfig()
        if self.tie_cfg.use_crf and not self.tie_cfg.use_slot_filling:
            raise ValueError("use_crf requires use_slot_filling")
        self.tag_dict = TagDictionary()
        self.encoder = TextEncoder(encoder_cfg)
        self.head_dropout = nn.Dropout(encoder_cfg.dropout)
        self.sf_dropout = nn.Dropout(encoder_cfg.dropout)
        self.domain_head = nn.Linear(encoder_cfg.d_model, len(DOMAINS))
        self.slot_head = nn.Linear(encoder_cfg.d_model, len(SLOTS))
        if self.tie_cfg.use_slot_filling:
            self.emission_head = nn.Linear(encoder_cfg.d_model, len(self.tag_dict))
            self.crf = CrfLayer(self.tag_dict) if self.tie_cfg.use_crf else None
        else:
            self.emission_head = None
            self.crf = None

    # --- heads -----------------------------------------------------------

    def head_logits(self, enc: EncoderOutput) -> tuple[torch.Tensor, torch.Tensor]:
        h = self.head_dropout(enc.h_cls)
        return self.domain_head(h), self.slot_head(h)

    def classify_heads(self, enc: EncoderOutput) -> tuple[torch.Tensor, torch.Tensor]:
        """Normalized (domain, slot) distributions."""
        d_logits, s_logits = self.head_logits(enc)
        return torch.softmax(d_logits, dim=-1), torch.softmax(s_logits, dim=-1)

    def emissions(self, enc: EncoderOutput) -> torch.Tensor:
        """Per-position unnormalized tag scores, (B, N, 22)."""
        if self.emission_head is None:
            raise ValueError("model was built without the slot filling head")
        return self.emission_head(self.sf_dropout(enc.h_tokens))

    # --- training --------------------------------------------------------

    def loss(
        self,
        tokens: torch.Tensor,
        mask: torch.Tensor,
        tags: torch.Tensor,
        domain: torch.Tensor,
        slot: torch.Tensor,
    ) -> tuple[torch.Tensor, dict[str, float]]:
        """Joint loss: CE(domain) + CE(slot) + slot-filling term.

        The slot-filling term is the batch-mean CRF NLL when the CRF is on,
        the token-averaged CE over unmasked positions otherwise, and absent
        entirely for the no-slot-filling ablation. Padded positions never
        contribute.
        """
        enc = self.encoder(tokens, mask)
        d_logits, s_logits = self.head_logits(enc)
        domain_loss = F.cross_entropy(d_logits, domain)
        slot_loss = F.cross_entropy(s_logits, slot)
        total = domain_loss + slot_loss
        parts = {"domain": float(domain_loss.detach()), "slot": float(slot_loss.detach())}
        if self.tie_cfg.use_slot_filling:
            em = self.emissions(enc)
            if self.crf is not None:
                sf_loss = self.crf.nll(em, tags, mask).mean()
            else:
                keep = mask.bool()
                sf_loss = F.cross_entropy(em[keep], tags[keep])
            total = total + sf_loss
            parts["slot_filling"] = float(sf_loss.detach())
        return total, parts

    # --- inference -------------------------------------------------------

    def _decode_mode(self, mode: str | None) -> str:
        if mode is None:
            return MODE_WITH_CRF if self.crf is not None else MODE_WITHOUT_CRF
        if mode not in (MODE_WITH_CRF, MODE_WITHOUT_CRF):
            raise ValueError(f"unknown decode mode {mode!r}")
        if mode == MODE_WITH_CRF and self.crf is None:
            raise ValueError("model has no CRF layer")
        return mode

    @torch.no_grad()
    def extract(
        self,
        tokens: torch.Tensor,
        mask: torch.Tensor,
        tokenizer: Tokenizer,
        mode: str | None = None,
    ) -> list[TieOutput]:
        """Extract transition info for each sequence in the batch.

        Domain/slot come from the classifier heads. The value is the best
        emission-scoring decoded span whose pair matches the heads; with no
        matching span the value is absent. A head-level UNK domain forces a
        fully UNK result.
        """
        was_training = self.training
        self.eval()
        try:
            enc = self.encoder(tokens, mask)
            domain_probs, slot_probs = self.classify_heads(enc)
            lengths = mask.long().sum(dim=1)
            B = tokens.shape[0]

            paths: list[list[int]]
            if self.tie_cfg.use_slot_filling:
                em = self.emissions(enc)
                if self._decode_mode(mode) == MODE_WITH_CRF:
                    paths, scores = self.crf.decode(em, mask)
                else:
                    argmax = em.argmax(dim=-1)
                    paths = [argmax[b, : int(lengths[b])].tolist() for b in range(B)]
                    picked = em.gather(2, argmax.unsqueeze(-1)).squeeze(-1)
                    scores = (picked * mask.to(em.dtype)).sum(dim=1)
            else:
                em = None
                paths = [[self.tag_dict.pad_index] * int(lengths[b]) for b in range(B)]
                scores = torch.zeros(B)

            outputs = []
            for b in range(B):
                outputs.append(
                    self._extract_one(
                        tokens[b, : int(lengths[b])].tolist(),
                        paths[b],
                        float(scores[b]),
                        domain_probs[b].tolist(),
                        slot_probs[b].tolist(),
                        em[b] if em is not None else None,
                        tokenizer,
                    )
                )
            return outputs
        finally:
            if was_training:
                self.train()

    def _extract_one(
        self,
        token_ids: list[int],
        path: list[int],
        path_score: float,
        domain_probs: list[float],
        slot_probs: list[float],
        em: torch.Tensor | None,
        tokenizer: Tokenizer,
    ) -> TieOutput:
        domain = DOMAINS[max(range(len(domain_probs)), key=domain_probs.__getitem__)]
        slot = SLOTS[max(range(len(slot_probs)), key=slot_probs.__getitem__)]
        tag_path = [self.tag_dict.from_index(i) for i in path]
        flags: list[str] = []

        if domain == Domain.UNK:
            if slot != Slot.UNK:
                flags.append("slot_without_domain")
            return TieOutput(
                info=TransitionInfo(),
                domain_probs=domain_probs,
                slot_probs=slot_probs,
                tag_path=tag_path,
                path_score=path_score,
                flags=flags,
            )

        value: str | None = None
        if slot != Slot.UNK and em is not None:
            wanted = pair_name(domain, slot)
            best_score = None
            best_span = None
            for pair, start, stop in iob_spans(tag_path):
                if pair != wanted:
                    continue
                span_score = float(sum(em[t, path[t]] for t in range(start, stop + 1)))
                if best_score is None or span_score >= best_score:  # ties -> latest span
                    best_score = span_score
                    best_span = (start, stop)
            if best_span is not None:
                value = tokenizer.decode(token_ids[best_span[0] : best_span[1] + 1])
            else:
                flags.append("no_matching_span")

        return TieOutput(
            info=TransitionInfo(domain=domain, slot=slot, value=value),
            domain_probs=domain_probs,
            slot_probs=slot_probs,
            tag_path=tag_path,
            path_score=path_score,
            flags=flags,
        )
