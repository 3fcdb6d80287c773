"""Evaluation metrics for extraction and generation outputs."""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass

from .labels import Domain, Slot, iob_spans
from .tokenizer import TRANSITION_TOKEN

log = logging.getLogger(__name__)


@dataclass
class TieEvalRecord:
    gold_domain: Domain
    gold_slot: Slot
    gold_tags: list[str]
    pred_domain: Domain
    pred_slot: Slot
    pred_tags: list[str]

    def __post_init__(self) -> None:
        if len(self.gold_tags) != len(self.pred_tags):
            raise ValueError("gold and predicted tag sequences must have equal length")


@dataclass
class GenEvalRecord:
    generated: str
    reference: str = ""
    prompt: object | None = None  # TransitionPrompt for transition-turn records
    mode: str = ""


# --- extraction metrics ----------------------------------------------------


def semantic_acc(records: list[TieEvalRecord]) -> float:
    """Fraction where domain, slot, and the entire tag sequence all match."""
    if not records:
        raise ValueError("semantic_acc needs at least one record")
    hits = sum(
        1
        for r in records
        if r.gold_domain == r.pred_domain and r.gold_slot == r.pred_slot and r.gold_tags == r.pred_tags
    )
    return hits / len(records)


def sen_sf_acc(records: list[TieEvalRecord]) -> float:
    """Fraction of records whose full tag sequence matches."""
    if not records:
        raise ValueError("sen_sf_acc needs at least one record")
    return sum(1 for r in records if r.gold_tags == r.pred_tags) / len(records)


def sf_f1(records: list[TieEvalRecord]) -> float:
    """Span-level micro F1 with exact (pair, offsets) matching."""
    if not records:
        raise ValueError("sf_f1 needs at least one record")
    tp = fp = fn = 0
    for r in records:
        gold = set(iob_spans(r.gold_tags))
        pred = set(iob_spans(r.pred_tags))
        tp += len(gold & pred)
        fp += len(pred - gold)
        fn += len(gold - pred)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def classification_scores(golds: list, preds: list, classes: list) -> dict[str, float]:
    """Accuracy plus support-weighted mean per-class F1."""
    if len(golds) != len(preds):
        raise ValueError("golds and preds must align")
    if not golds:
        raise ValueError("classification_scores needs at least one pair")
    accuracy = sum(1 for g, p in zip(golds, preds) if g == p) / len(golds)
    weighted = 0.0
    for cls in classes:
        support = sum(1 for g in golds if g == cls)
        if support == 0:
            continue
        tp = sum(1 for g, p in zip(golds, preds) if g == cls and p == cls)
        pp = sum(1 for p in preds if p == cls)
        precision = tp / pp if pp else 0.0
        recall = tp / support
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        weighted += support * f1
    return {"accuracy": accuracy, "weighted_f1": weighted / len(golds)}


# --- generation metrics ------------------------------------------------------


def distinct_n(responses: list[str], n: int) -> float:
    """Unique n-grams across all responses over total n-gram count."""
    if n not in (1, 2):
        raise ValueError("distinct_n supports n in {1, 2}")
    total = 0
    seen: set[tuple[str, ...]] = set()
    for response in responses:
        toks = response.lower().split()
        for i in range(len(toks) - n + 1):
            seen.add(tuple(toks[i : i + n]))
            total += 1
    if total == 0:
        log.warning("distinct_%d: no response long enough; returning 0", n)
        return 0.0
    return len(seen) / total


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates: list[str], references: list[str], max_order: int = 4) -> float:
    """Corpus-level BLEU with brevity penalty.

    Unigram precision is never smoothed (zero overlap floors the score at 0);
    empty higher-order precisions get add-one smoothing on both numerator and
    denominator.
    """
    if len(candidates) != len(references):
        raise ValueError("candidates and references must align")
    if not candidates:
        raise ValueError("bleu needs at least one pair")
    matched = [0] * max_order
    totals = [0] * max_order
    cand_len = ref_len = 0
    for cand, ref in zip(candidates, references):
        c_toks = cand.split()
        r_toks = ref.split()
        cand_len += len(c_toks)
        ref_len += len(r_toks)
        for n in range(1, max_order + 1):
            c_counts = _ngram_counts(c_toks, n)
            r_counts = _ngram_counts(r_toks, n)
            totals[n - 1] += max(len(c_toks) - n + 1, 0)
            matched[n - 1] += sum(min(count, r_counts[gram]) for gram, count in c_counts.items())

    log_sum = 0.0
    for n in range(1, max_order + 1):
        m, t = matched[n - 1], totals[n - 1]
        if n == 1:
            if m == 0:
                return 0.0
            p = m / t
        else:
            p = (m + 1) / (t + 1) if m == 0 else m / t
        log_sum += math.log(p)
    geo_mean = math.exp(log_sum / max_order)
    if cand_len == 0:
        return 0.0
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return bp * geo_mean


# --- transition-sentence metrics ---------------------------------------------

_DOMAIN_WORDS = {
    Domain.TRAIN: re.compile(r"\btrains?\b", re.IGNORECASE),
    Domain.RESTAURANT: re.compile(r"\brestaurants?\b", re.IGNORECASE),
    Domain.ATTRACTION: re.compile(r"\battractions?\b", re.IGNORECASE),
    Domain.TAXI: re.compile(r"\btaxis?\b", re.IGNORECASE),
}


def _split_transition(generated: str) -> tuple[bool, str]:
    """(has exactly one marker, text after the first marker)."""
    count = generated.count(TRANSITION_TOKEN)
    if count != 1:
        return False, ""
    return True, generated.split(TRANSITION_TOKEN, 1)[1]

def _normalize(text: str) -> str:
    return " ".join(text.lower().split())


def transition_accuracy(records: list[GenEvalRecord]) -> float:
    """Fraction of generations carrying exactly one transition marker."""
    if not records:
        raise ValueError("transition_accuracy needs at least one record")
    return sum(1 for r in records if _split_transition(r.generated)[0]) / len(records)


def _domain_hit(record: GenEvalRecord) -> bool:
    ok, sentence = _split_transition(record.generated)
    if not ok:
        return False
    if record.prompt is None:
        raise ValueError("d/d-v accuracy needs records with prompts")
    domain = record.prompt.info.domain
    pattern = _DOMAIN_WORDS.get(domain)
    if pattern is None:
        raise ValueError("d accuracy needs a non-UNK prompt domain")
    hit = bool(pattern.search(sentence))
    if not hit:
        log.debug("domain keyword %r missing from transition sentence %r", domain.value, sentence)
    return hit


def d_accuracy(records: list[GenEvalRecord]) -> float:
    """Fraction whose transition sentence names the prompt's domain keyword."""
    if not records:
        raise ValueError("d_accuracy needs at least one record")
    return sum(1 for r in records if _domain_hit(r)) / len(records)


def dv_accuracy(records: list[GenEvalRecord]) -> float:
    """d_accuracy plus the prompt's value appearing in the transition sentence."""
    if not records:
        raise ValueError("dv_accuracy needs at least one record")
    hits = 0
    for r in records:
        if not _domain_hit(r):
            continue
        value = r.prompt.info.value
        if not value:
            raise ValueError("dv accuracy needs prompts carrying a value")
        _, sentence = _split_transition(r.generated)
        if _normalize(value) in _normalize(sentence):
            hits += 1
    return hits / len(records)
