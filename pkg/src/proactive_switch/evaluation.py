"""Standalone generation-model evaluation (diversity, BLEU, prompt accuracy)."""

from __future__ import annotations

import logging

import torch

from . import metrics
from .corpus import MODE_CHITCHAT, MODE_TASK, SPEAKER_SYSTEM, Dialogue
from .labels import Domain, Slot, TransitionInfo
from .tokenizer import Tokenizer
from .tsg.data import context_text
from .tsg.decoder import TransitionDecoder
from .tsg.generate import generate_text
from .tsg.prompts import KIND_DOMAIN, KIND_DSV, TransitionPrompt, build_prompt
from .tsg.sampling import DECODE_PRESETS

log = logging.getLogger(__name__)


def _gen(model, tokenizer, input_text, preset, use_adapters, seed_tuple, max_new_tokens=48):
    generator = torch.Generator()
    generator.manual_seed(hash(seed_tuple) % (2**63))
    return generate_text(
        model,
        tokenizer,
        input_text,
        DECODE_PRESETS[preset],
        use_adapters=use_adapters,
        max_new_tokens=max_new_tokens,
        generator=generator,
    )


def evaluate_generation(
    model: TransitionDecoder,
    tokenizer: Tokenizer,
    dialogues: list[Dialogue],
    seed: int = 0,
    with_prompt: bool = True,
) -> dict:
    """Generate at every system turn of the given dialogues and score.

    Chitchat turns feed diversity metrics, task turns corpus BLEU against the
    gold responses, and transition turns the transition/d/d-v accuracies under
    gold prompts (prompt text omitted from the input when with_prompt=False,
    matching the no-prompt baseline).
    """
    max_turns = model.cfg.max_context_turns
    chitchat_gen: list[str] = []
    task_gen: list[str] = []
    task_ref: list[str] = []
    domain_records: list[metrics.GenEvalRecord] = []
    dsv_records: list[metrics.GenEvalRecord] = []

    for di, d in enumerate(dialogues):
        tr = d.transition
        for j, turn in enumerate(d.turns):
            if turn.speaker != SPEAKER_SYSTEM:
                continue
            if turn.mode == MODE_CHITCHAT and j != tr.turn_index:
                text = _gen(
                    model, tokenizer, context_text(d.turns, j, max_turns, None),
                    "chitchat", False, (seed, di, j, "cc"),
                )
                chitchat_gen.append(text)
            elif turn.mode == MODE_TASK:
                text = _gen(
                    model, tokenizer, context_text(d.turns, j, max_turns, turn.acts),
                    "task", False, (seed, di, j, "task"),
                )
                task_gen.append(text)
                task_ref.append(turn.text)

        if tr.domain == Domain.UNK:
            continue
        context = context_text(d.turns, tr.turn_index, max_turns, None)
        domain_prompt = TransitionPrompt(KIND_DOMAIN, TransitionInfo(domain=tr.domain))
        input_text = f"{build_prompt(domain_prompt)} {context}" if with_prompt else context
        generated = _gen(model, tokenizer, input_text, "transition", True, (seed, di, "d"))
        domain_records.append(metrics.GenEvalRecord(generated=generated, prompt=domain_prompt, mode="transition"))

        if tr.slot != Slot.UNK and tr.value:
            dsv_prompt = TransitionPrompt(KIND_DSV, TransitionInfo(domain=tr.domain, slot=tr.slot, value=tr.value))
            input_text = f"{build_prompt(dsv_prompt)} {context}" if with_prompt else context
            generated = _gen(model, tokenizer, input_text, "transition", True, (seed, di, "dsv"))
            dsv_records.append(metrics.GenEvalRecord(generated=generated, prompt=dsv_prompt, mode="transition"))

    report: dict = {
        "with_prompt": with_prompt,
        "meteor": None,
        "bertscore": None,
        "notes": "meteor/bertscore require external resources; reported as null",
    }
    if chitchat_gen:
        report["chitchat"] = {
            "n": len(chitchat_gen),
            "distinct_1": metrics.distinct_n(chitchat_gen, 1),
            "distinct_2": metrics.distinct_n(chitchat_gen, 2),
        }
    if task_gen:
        report["task"] = {"n": len(task_gen), "bleu": metrics.bleu(task_gen, task_ref)}
    if domain_records:
        report["domain_ts"] = {
            "n": len(domain_records),
            "transition_accuracy": metrics.transition_accuracy(domain_records),
            "d_accuracy": metrics.d_accuracy(domain_records),
        }
    if dsv_records:
        report["dsv_ts"] = {
            "n": len(dsv_records),
            "transition_accuracy": metrics.transition_accuracy(dsv_records),
            "d_accuracy": metrics.d_accuracy(dsv_records),
            "dv_accuracy": metrics.dv_accuracy(dsv_records),
        }
    return report
