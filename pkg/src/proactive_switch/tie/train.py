"""Training loop and evaluation for the transition info extractor."""

from __future__ import annotations

import copy
import logging
import random
from dataclasses import dataclass, field

import torch

from .. import metrics
from ..corpus import TrainingExample
from ..encoder import EncoderConfig
from ..labels import Domain, Slot
from ..tokenizer import Tokenizer
from .data import DOMAIN_INDEX, SLOT_INDEX, TieBatch, pad_batch
from .model import TieConfig, TieModel

log = logging.getLogger(__name__)


@dataclass
class TieTrainConfig:
    use_crf: bool = True
    use_slot_filling: bool = True
    lr: float = 5e-5
    batch_size: int = 32
    max_epochs: int = 30
    patience: int = 3
    seed: int = 0


@dataclass
class TieTrainResult:
    model: TieModel
    tokenizer: Tokenizer
    history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_metric: float = 0.0


def _batches(examples: list[TrainingExample], batch_size: int, rng: random.Random | None):
    order = list(range(len(examples)))
    if rng is not None:
        rng.shuffle(order)
    for i in range(0, len(order), batch_size):
        yield [examples[j] for j in order[i : i + batch_size]]


def evaluate_tie(
    model: TieModel,
    examples: list[TrainingExample],
    tokenizer: Tokenizer,
    batch_size: int = 32,
    mode: str | None = None,
) -> dict[str, float]:
    """Extraction metrics over a labelled example set."""
    if not examples:
        raise ValueError("no examples to evaluate")
    records: list[metrics.TieEvalRecord] = []
    gold_domains: list[str] = []
    pred_domains: list[str] = []
    gold_slots: list[str] = []
    pred_slots: list[str] = []
    for chunk in _batches(examples, batch_size, rng=None):
        batch = pad_batch(chunk, tokenizer, model.tag_dict)
        outputs = model.extract(batch.tokens, batch.mask, tokenizer, mode=mode)
        for example, out in zip(chunk, outputs):
            gold_domains.append(example.domain.value)
            pred_domains.append(out.info.domain.value)
            gold_slots.append(example.slot.value)
            pred_slots.append(out.info.slot.value)
            if model.tie_cfg.use_slot_filling:
                records.append(
                    metrics.TieEvalRecord(
                        gold_domain=example.domain,
                        gold_slot=example.slot,
                        gold_tags=example.tags,
                        pred_domain=out.info.domain,
                        pred_slot=out.info.slot,
                        pred_tags=out.tag_path,
                    )
                )

    domain_scores = metrics.classification_scores(gold_domains, pred_domains, [d.value for d in Domain])
    slot_scores = metrics.classification_scores(gold_slots, pred_slots, [s.value for s in Slot])
    result = {
        "domain_accuracy": domain_scores["accuracy"],
        "domain_weighted_f1": domain_scores["weighted_f1"],
        "slot_accuracy": slot_scores["accuracy"],
        "slot_weighted_f1": slot_scores["weighted_f1"],
    }
    if records:
        result["sen_sf_acc"] = metrics.sen_sf_acc(records)
        result["sf_f1"] = metrics.sf_f1(records)
        result["semantic_acc"] = metrics.semantic_acc(records)
    return result


def selection_metric(scores: dict[str, float]) -> float:
    """Early-stopping target: semantic_acc, or mean head accuracy without it."""
    if "semantic_acc" in scores:
        return scores["semantic_acc"]
    return 0.5 * (scores["domain_accuracy"] + scores["slot_accuracy"])


def train_tie(
    train_examples: list[TrainingExample],
    valid_examples: list[TrainingExample],
    tokenizer: Tokenizer,
    encoder_cfg: EncoderConfig,
    cfg: TieTrainConfig,
) -> TieTrainResult:
    if not train_examples:
        raise ValueError("empty training corpus")
    if not valid_examples:
        raise ValueError("empty validation corpus")

    torch.manual_seed(cfg.seed)
    model = TieModel(encoder_cfg, TieConfig(use_crf=cfg.use_crf, use_slot_filling=cfg.use_slot_filling))
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    shuffle_rng = random.Random(cfg.seed)

    result = TieTrainResult(model=model, tokenizer=tokenizer)
    best_state = None
    epochs_since_best = 0
    for epoch in range(cfg.max_epochs):
        model.train()
        epoch_loss = 0.0
        n_batches = 0
        for chunk in _batches(train_examples, cfg.batch_size, shuffle_rng):
            batch = pad_batch(chunk, tokenizer, model.tag_dict)
            optimizer.zero_grad()
            loss, _ = model.loss(batch.tokens, batch.mask, batch.tags, batch.domain, batch.slot)
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach())
            n_batches += 1

        scores = evaluate_tie(model, valid_examples, tokenizer, cfg.batch_size)
        metric = selection_metric(scores)
        result.history.append(
            {"epoch": epoch, "train_loss": epoch_loss / max(n_batches, 1), "val_metric": metric, **scores}
        )
        log.info("epoch %d: loss=%.4f val=%.4f", epoch, epoch_loss / max(n_batches, 1), metric)

        if best_state is None or metric > result.best_metric:
            result.best_metric = metric
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
    return result
