"""Linear-chain CRF over the slot-filling tag space.

The log-partition runs through the compiled/NumPy kernels via a custom
autograd function whose backward uses the forward-backward posterior
marginals; the gold-path score stays in plain differentiable torch ops.

Structurally impossible IOB moves (into I-x from anything but B-x/I-x, and
starting at I-x) are pinned to a large negative score instead of -inf so the
partition function and its gradients stay finite.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from ..crf import backend
from ..labels import TagDictionary

BAN_SCORE = -1.0e4


def _lengths_from_mask(mask: torch.Tensor) -> torch.Tensor:
    lengths = mask.long().sum(dim=1)
    T = mask.shape[1]
    aligned = torch.arange(T, device=mask.device)[None, :] < lengths[:, None]
    if not torch.equal(aligned, mask.bool()):
        raise ValueError("mask must be a contiguous prefix (right padding only)")
    return lengths


class _LogPartition(torch.autograd.Function):
    @staticmethod
    def forward(ctx, emissions, transitions, start, end, lengths):
        logz, unary, pairwise = backend.crf_forward_backward(
            emissions.detach().cpu().numpy(),
            lengths.detach().cpu().numpy(),
            transitions.detach().cpu().numpy(),
            start.detach().cpu().numpy(),
            end.detach().cpu().numpy(),
        )
        unary_t = torch.from_numpy(unary)
        pairwise_t = torch.from_numpy(pairwise)
        ctx.save_for_backward(unary_t, pairwise_t, lengths)
        ctx.dtype = emissions.dtype
        return torch.from_numpy(logz).to(emissions.dtype)

    @staticmethod
    def backward(ctx, grad_out):
        unary, pairwise, lengths = ctx.saved_tensors
        g = grad_out.to(unary.dtype)
        grad_em = g[:, None, None] * unary
        grad_trans = (g[:, None, None] * pairwise).sum(dim=0)
        grad_start = (g[:, None] * unary[:, 0, :]).sum(dim=0)
        rows = torch.arange(unary.shape[0])
        grad_end = (g[:, None] * unary[rows, lengths - 1, :]).sum(dim=0)
        return (
            grad_em.to(ctx.dtype),
            grad_trans.to(ctx.dtype),
            grad_start.to(ctx.dtype),
            grad_end.to(ctx.dtype),
            None,
        )


class CrfLayer(nn.Module):
    def __init__(self, tag_dict: TagDictionary | None = None, init_scale: float = 0.1):
        super().__init__()
        self.tag_dict = tag_dict or TagDictionary()
        L = len(self.tag_dict)
        self.transitions = nn.Parameter(torch.empty(L, L).uniform_(-init_scale, init_scale))
        self.start_scores = nn.Parameter(torch.empty(L).uniform_(-init_scale, init_scale))
        self.end_scores = nn.Parameter(torch.empty(L).uniform_(-init_scale, init_scale))

        trans_ban = torch.zeros(L, L, dtype=torch.bool)
        start_ban = torch.zeros(L, dtype=torch.bool)
        for j in range(L):
            if self.tag_dict.banned_start(j):
                start_ban[j] = True
            for i in range(L):
                if self.tag_dict.banned_transition(i, j):
                    trans_ban[i, j] = True
        self.register_buffer("transition_ban", trans_ban)
        self.register_buffer("start_ban", start_ban)

    def effective_scores(self) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Learned scores with banned entries pinned at BAN_SCORE."""
        ban = torch.as_tensor(BAN_SCORE, dtype=self.transitions.dtype)
        trans = torch.where(self.transition_ban, ban, self.transitions)
        start = torch.where(self.start_ban, ban, self.start_scores)
        return trans, start, self.end_scores

    def log_partition(self, emissions: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        lengths = _lengths_from_mask(mask)
        if (lengths == 0).any():
            raise ValueError("fully masked sequence has no partition function")
        trans, start, end = self.effective_scores()
        return _LogPartition.apply(emissions, trans, start, end, lengths)

    def gold_score(self, emissions: torch.Tensor, tags: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        lengths = _lengths_from_mask(mask)
        trans, start, end = self.effective_scores()
        B, T, _ = emissions.shape

        if self.start_ban[tags[:, 0]].any():
            raise ValueError("gold path starts at a structurally banned tag")
        score = start[tags[:, 0]] + emissions[:, 0].gather(1, tags[:, 0:1]).squeeze(1)
        fmask = mask.to(emissions.dtype)
        for t in range(1, T):
            valid = mask[:, t].bool()
            if valid.any() and self.transition_ban[tags[valid, t - 1], tags[valid, t]].any():
                raise ValueError(f"gold path uses a structurally banned transition at step {t}")
            step = trans[tags[:, t - 1], tags[:, t]] + emissions[:, t].gather(1, tags[:, t : t + 1]).squeeze(1)
            score = score + fmask[:, t] * step
        last_tags = tags.gather(1, (lengths - 1).unsqueeze(1)).squeeze(1)
        return score + end[last_tags]

    def nll(self, emissions: torch.Tensor, tags: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """Per-sequence negative log-likelihood, logZ - score(gold), >= 0."""
        return self.log_partition(emissions, mask) - self.gold_score(emissions, tags, mask)

    @torch.no_grad()
    def decode(self, emissions: torch.Tensor, mask: torch.Tensor) -> tuple[list[list[int]], torch.Tensor]:
        """Viterbi paths and their exact recomputed scores."""
        lengths = _lengths_from_mask(mask)
        if (lengths == 0).any():
            raise ValueError("fully masked sequence cannot be decoded")
        trans, start, end = self.effective_scores()
        paths, scores = backend.crf_viterbi(
            emissions.detach().cpu().numpy(),
            lengths.cpu().numpy(),
            trans.detach().cpu().numpy(),
            start.detach().cpu().numpy(),
            end.detach().cpu().numpy(),
        )
        out = [list(map(int, paths[b, : int(lengths[b])])) for b in range(paths.shape[0])]
        return out, torch.from_numpy(np.asarray(scores)).to(emissions.dtype)
