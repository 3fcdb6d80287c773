"""Training for the unified generator and the adapter-extended TSG."""

from __future__ import annotations

import copy
import logging
import math
import random
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F

from ..checkpoint import bank_hash
from ..tokenizer import Tokenizer
from .data import GenExample
from .decoder import AdapterConfig, DecoderConfig, TransitionDecoder

log = logging.getLogger(__name__)

MODE_ADAPTER = "adapter"
MODE_FULL_FINETUNE = "full_finetune"

IGNORE_INDEX = -100


@dataclass
class GenTrainConfig:
    lr: float = 5e-5
    batch_size: int = 20
    max_epochs: int = 20
    patience: int = 3
    seed: int = 0
    cosine_lr_decay: bool = False  # anneal lr to ~0 over max_epochs


@dataclass
class GenTrainResult:
    model: TransitionDecoder
    tokenizer: Tokenizer
    history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_perplexity: float = math.inf
    base_hash_before: str | None = None
    base_hash_after: str | None = None
    trainable_fraction: float = 1.0


def prompt_embedding_ids(tokenizer: Tokenizer) -> list[int]:
    """Prompt-syntax tokens whose embeddings train with the extension.

    These tokens ([TRANSITION] and the prompt frame words) carry no base
    training signal, so the extension learns additive embedding deltas for
    them — the trainable half of transition prompt conditioning.
    """
    words = ["[TRANSITION]", "(", ")", "=", ",", "domain", "slot", "value"]
    return [tokenizer.token_to_id(w.lower() if not w.startswith("[") else w) for w in words]


def encode_pairs(examples: list[GenExample], tokenizer: Tokenizer, max_len: int) -> list[tuple[list[int], list[int]]]:
    pairs = []
    for e in examples:
        inp = tokenizer.encode(e.input_text)
        tgt = tokenizer.encode(e.target_text)
        overflow = len(inp) + len(tgt) - max_len
        if overflow > 0:
            # Desk-scale inputs are short; drop the oldest context tokens if not.
            log.warning("truncating %d leading input tokens for %s", overflow, e.dialogue_id)
            inp = inp[overflow:]
        pairs.append((inp, tgt))
    return pairs


def pad_lm_batch(pairs: list[tuple[list[int], list[int]]], pad_id: int) -> tuple[torch.Tensor, torch.Tensor]:
    """Right-padded token matrix plus labels masking input and pad positions."""
    N = max(len(i) + len(t) for i, t in pairs)
    B = len(pairs)
    tokens = torch.full((B, N), pad_id, dtype=torch.long)
    labels = torch.full((B, N), IGNORE_INDEX, dtype=torch.long)
    for b, (inp, tgt) in enumerate(pairs):
        seq = inp + tgt
        tokens[b, : len(seq)] = torch.tensor(seq, dtype=torch.long)
        labels[b, len(inp) : len(seq)] = torch.tensor(tgt, dtype=torch.long)
    return tokens, labels


def lm_loss(model: TransitionDecoder, tokens: torch.Tensor, labels: torch.Tensor, use_adapters: bool) -> tuple[torch.Tensor, int]:
    logits = model(tokens, use_adapters=use_adapters)
    shifted_logits = logits[:, :-1].reshape(-1, logits.shape[-1])
    shifted_labels = labels[:, 1:].reshape(-1)
    n_targets = int((shifted_labels != IGNORE_INDEX).sum())
    loss = F.cross_entropy(shifted_logits, shifted_labels, ignore_index=IGNORE_INDEX)
    return loss, n_targets


@torch.no_grad()
def perplexity(model: TransitionDecoder, pairs, pad_id: int, batch_size: int, use_adapters: bool) -> float:
    was_training = model.training
    model.eval()
    try:
        total_nll = 0.0
        total_tokens = 0
        for i in range(0, len(pairs), batch_size):
            tokens, labels = pad_lm_batch(pairs[i : i + batch_size], pad_id)
            loss, n = lm_loss(model, tokens, labels, use_adapters)
            total_nll += float(loss) * n
            total_tokens += n
        return math.exp(total_nll / max(total_tokens, 1))
    finally:
        if was_training:
            model.train()


def _run_training(
    model: TransitionDecoder,
    parameters,
    train_pairs,
    valid_pairs,
    tokenizer: Tokenizer,
    cfg: GenTrainConfig,
    use_adapters: bool,
    result: GenTrainResult,
) -> None:
    optimizer = torch.optim.Adam(parameters, lr=cfg.lr)
    scheduler = (
        torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=cfg.max_epochs)
        if cfg.cosine_lr_decay
        else None
    )
    shuffle_rng = random.Random(cfg.seed)
    best_state = None
    epochs_since_best = 0
    for epoch in range(cfg.max_epochs):
        model.train()
        order = list(range(len(train_pairs)))
        shuffle_rng.shuffle(order)
        epoch_loss = 0.0
        n_batches = 0
        for i in range(0, len(order), cfg.batch_size):
            chunk = [train_pairs[j] for j in order[i : i + cfg.batch_size]]
            tokens, labels = pad_lm_batch(chunk, tokenizer.pad_id)
            optimizer.zero_grad()
            loss, _ = lm_loss(model, tokens, labels, use_adapters)
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach())
            n_batches += 1
        if scheduler is not None:
            scheduler.step()
        val_ppl = perplexity(model, valid_pairs, tokenizer.pad_id, cfg.batch_size, use_adapters)
        result.history.append({"epoch": epoch, "train_loss": epoch_loss / max(n_batches, 1), "val_ppl": val_ppl})
        log.info("epoch %d: loss=%.4f val_ppl=%.3f", epoch, epoch_loss / max(n_batches, 1), val_ppl)
        if val_ppl < result.best_perplexity:
            result.best_perplexity = val_ppl
            result.best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best > cfg.patience:
                log.info("early stopping at epoch %d (best %d)", epoch, result.best_epoch)
                break
    model.load_state_dict(best_state)
    model.eval()


def train_unified(
    train_examples: list[GenExample],
    valid_examples: list[GenExample],
    tokenizer: Tokenizer,
    decoder_cfg: DecoderConfig,
    cfg: GenTrainConfig,
) -> GenTrainResult:
    """Train the base unified model on mixed chitchat/task examples."""
    if not train_examples:
        raise ValueError("empty training corpus")
    if not valid_examples:
        raise ValueError("empty validation corpus")
    torch.manual_seed(cfg.seed)
    model = TransitionDecoder(decoder_cfg)
    result = GenTrainResult(model=model, tokenizer=tokenizer)
    train_pairs = encode_pairs(train_examples, tokenizer, decoder_cfg.max_len)
    valid_pairs = encode_pairs(valid_examples, tokenizer, decoder_cfg.max_len)
    _run_training(model, model.parameters(), train_pairs, valid_pairs, tokenizer, cfg, use_adapters=False, result=result)
    return result


def train_tsg(
    base_model: TransitionDecoder,
    train_examples: list[GenExample],
    valid_examples: list[GenExample],
    tokenizer: Tokenizer,
    adapter_cfg: AdapterConfig | None,
    mode: str,
    cfg: GenTrainConfig,
) -> GenTrainResult:
    """Extend the trained base model for transition-turn generation.

    mode="adapter" freezes every base parameter (verified by hash) and trains
    only the freshly installed adapter banks; mode="full_finetune" retrains the
    whole model, reproducing the no-adapter baseline and its side effects.
    """
    if not train_examples:
        raise ValueError("empty transition corpus")
    if not valid_examples:
        raise ValueError("empty validation corpus")
    if mode not in (MODE_ADAPTER, MODE_FULL_FINETUNE):
        raise ValueError(f"unknown tsg training mode {mode!r}")
    torch.manual_seed(cfg.seed)
    model = copy.deepcopy(base_model)
    result = GenTrainResult(model=model, tokenizer=tokenizer)
    train_pairs = encode_pairs(train_examples, tokenizer, model.cfg.max_len)
    valid_pairs = encode_pairs(valid_examples, tokenizer, model.cfg.max_len)

    if mode == MODE_ADAPTER:
        if adapter_cfg is None:
            raise ValueError("adapter mode needs an AdapterConfig")
        model.add_adapters(adapter_cfg, prompt_token_ids=prompt_embedding_ids(tokenizer))
        model.freeze_base()
        result.base_hash_before = bank_hash(model.base_state_dict())
        result.trainable_fraction = model.trainable_fraction()
        log.info(
            "adapter tuning (%s, bottleneck %d): %.2f%% of parameters trainable "
            "(houlsby installs twice pfeiffer's adapter parameters)",
            adapter_cfg.variant,
            adapter_cfg.bottleneck,
            100 * result.trainable_fraction,
        )
        _run_training(
            model, model.extension_parameters(), train_pairs, valid_pairs, tokenizer, cfg, use_adapters=True, result=result
        )
        result.base_hash_after = bank_hash(model.base_state_dict())
        if result.base_hash_before != result.base_hash_after:
            raise RuntimeError("frozen base parameters changed during adapter tuning")
    else:
        result.trainable_fraction = 1.0
        _run_training(
            model, model.parameters(), train_pairs, valid_pairs, tokenizer, cfg, use_adapters=False, result=result
        )
    return result
