"""End-to-end orchestration: extraction-gated transition generation.

Live sessions track the chitchat history with the extractor; the first
non-UNK extraction triggers the adapter-extended generator under the richest
supportable prompt, after which the session switches to task mode. Batch
evaluation replays annotated dialogues at their transition turns and scores
the combined extractor + generator behaviour.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import torch

from . import metrics
from .checkpoint import bank_hash, load_generator_checkpoint, load_tie_checkpoint
from .corpus import (
    MODE_CHITCHAT,
    MODE_TASK,
    SPEAKER_SYSTEM,
    SPEAKER_USER,
    Dialogue,
    TrainingExample,
    Turn,
    derive_iob,
)
from .labels import Domain, Slot, TagDictionary, TransitionInfo
from .tie.data import pad_batch
from .tie.model import TieModel, TieOutput
from .tie.train import evaluate_tie
from .tokenizer import CLS_TOKEN, SEP_TOKEN, Tokenizer
from .tsg.data import context_text
from .tsg.decoder import TransitionDecoder
from .tsg.generate import generate_text, split_transition_response
from .tsg.prompts import KIND_DOMAIN, KIND_DSV, TransitionPrompt, build_prompt, richest_prompt
from .tsg.sampling import DECODE_PRESETS, SamplerConfig

log = logging.getLogger(__name__)


@dataclass
class SessionState:
    turns: list[Turn] = field(default_factory=list)
    mode: str = MODE_CHITCHAT
    transitioned: bool = False
    last_tie: TieOutput | None = None

    @property
    def turn_count(self) -> int:
        return len(self.turns)


@dataclass
class StepResult:
    response: str
    transition_sentence: str | None
    info: TransitionInfo
    state: SessionState
    prompt: str | None = None


class DialoguePipeline:
    def __init__(
        self,
        tie_model: TieModel,
        tie_tokenizer: Tokenizer,
        generator: TransitionDecoder,
        gen_tokenizer: Tokenizer,
        seed: int = 0,
        presets: dict[str, SamplerConfig] | None = None,
        max_new_tokens: int = 48,
    ):
        self.tie_model = tie_model
        self.tie_tokenizer = tie_tokenizer
        self.generator = generator
        self.gen_tokenizer = gen_tokenizer
        self.seed = seed
        self.presets = presets or DECODE_PRESETS
        self.max_new_tokens = max_new_tokens
        self.tag_dict = TagDictionary()
        self.tie_hash = bank_hash(tie_model.state_dict())
        self.generator_hash = bank_hash(generator.state_dict())

    @classmethod
    def from_checkpoints(cls, tie_path: str | Path, generator_path: str | Path, seed: int = 0) -> "DialoguePipeline":
        tie_model, tie_tok, _ = load_tie_checkpoint(tie_path)
        generator, gen_tok, _ = load_generator_checkpoint(generator_path)
        return cls(tie_model, tie_tok, generator, gen_tok, seed=seed)

    def new_session(self) -> SessionState:
        return SessionState()

    # --- live stepping -----------------------------------------------------

    def _tie_input(self, turns: list[Turn]) -> tuple[torch.Tensor, torch.Tensor]:
        """[CLS] t0 [SEP] t1 [SEP] ... framing, oldest turns dropped to fit."""
        from .tokenizer import split_text

        max_len = self.tie_model.encoder_cfg.max_len
        turn_tokens = [split_text(t.text) for t in turns]
        total = 1 + sum(len(t) + 1 for t in turn_tokens)
        start = 0
        while total > max_len and start < len(turn_tokens) - 1:
            total -= len(turn_tokens[start]) + 1
            start += 1
        tokens = [CLS_TOKEN]
        for toks in turn_tokens[start:]:
            tokens.extend(toks)
            tokens.append(SEP_TOKEN)
        ids = torch.tensor([self.tie_tokenizer.tokens_to_ids(tokens)], dtype=torch.long)
        mask = torch.ones_like(ids, dtype=torch.bool)
        return ids, mask

    def _generator_for_turn(self, turn_count: int) -> torch.Generator:
        gen = torch.Generator()
        gen.manual_seed(self.seed * 1_000_003 + turn_count)
        return gen

    def _generate(self, input_text: str, preset: str, use_adapters: bool, turn_count: int) -> str:
        return generate_text(
            self.generator,
            self.gen_tokenizer,
            input_text,
            self.presets[preset],
            use_adapters=use_adapters,
            max_new_tokens=self.max_new_tokens,
            generator=self._generator_for_turn(turn_count),
        )

    def step(self, state: SessionState, user_text: str, acts: str | None = None) -> StepResult:
        """Process one user message and produce the system turn."""
        state.turns.append(Turn(SPEAKER_USER, user_text, state.mode, acts=None))
        info = TransitionInfo()
        transition_sentence: str | None = None
        prompt_text: str | None = None

        if state.mode == MODE_CHITCHAT and not state.transitioned:
            ids, mask = self._tie_input(state.turns)
            tie_out = self.tie_model.extract(ids, mask, self.tie_tokenizer)[0]
            state.last_tie = tie_out
            info = tie_out.info
            if info.domain != Domain.UNK:
                prompt = richest_prompt(info)
                prompt_text = build_prompt(prompt)
                context = context_text(
                    state.turns, len(state.turns), self.generator.cfg.max_context_turns, acts=None
                )
                generated = self._generate(
                    f"{prompt_text} {context}", "transition", use_adapters=True, turn_count=state.turn_count
                )
                response, transition_sentence = split_transition_response(generated)
                if transition_sentence is None:
                    log.warning("transition generation produced no marker: %r", generated)
                state.transitioned = True
                state.mode = MODE_TASK
            else:
                context = context_text(
                    state.turns, len(state.turns), self.generator.cfg.max_context_turns, acts=None
                )
                response = self._generate(context, "chitchat", use_adapters=False, turn_count=state.turn_count)
        else:
            context = context_text(state.turns, len(state.turns), self.generator.cfg.max_context_turns, acts=acts)
            response = self._generate(context, "task", use_adapters=False, turn_count=state.turn_count)

        system_text = response if transition_sentence is None else f"{response} [TRANSITION] {transition_sentence}"
        state.turns.append(Turn(SPEAKER_SYSTEM, system_text, state.mode if state.transitioned else MODE_CHITCHAT))
        return StepResult(
            response=response,
            transition_sentence=transition_sentence,
            info=info,
            state=state,
            prompt=prompt_text,
        )

    # --- batch evaluation ----------------------------------------------------

    def run_batch(
        self,
        dialogues: list[Dialogue],
        prompt_source: str = "tie",
        report_path: str | Path | None = None,
        seed: int | None = None,
    ) -> dict:
        """Combined evaluation at transition turns; optionally writes the report."""
        if prompt_source not in ("tie", "gold"):
            raise ValueError("prompt_source must be 'tie' or 'gold'")
        seed = self.seed if seed is None else seed

        examples: list[TrainingExample] = []
        usable: list[Dialogue] = []
        for d in dialogues:
            if d.transition is None:  # defensive: schema requires it
                log.warning("skipping dialogue %s without gold annotation", d.id)
                continue
            examples.append(derive_iob(d, self.tie_tokenizer, self.tag_dict, self.tie_model.encoder_cfg.max_len))
            usable.append(d)

        report: dict = {
            "prompt_source": prompt_source,
            "n_dialogues": len(usable),
            "meteor": None,
            "bertscore": None,
            "notes": "meteor/bertscore require external resources; reported as null",
        }
        traces: list[dict] = []
        if not usable:
            report["tie"] = {}
            report["generation"] = {}
            report["traces"] = []
            if report_path is not None:
                Path(report_path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
            return report

        report["tie"] = evaluate_tie(self.tie_model, examples, self.tie_tokenizer)

        extractions: list[TieOutput] = []
        batch_size = 32
        for i in range(0, len(examples), batch_size):
            batch = pad_batch(examples[i : i + batch_size], self.tie_tokenizer, self.tag_dict)
            extractions.extend(self.tie_model.extract(batch.tokens, batch.mask, self.tie_tokenizer))

        domain_records: list[metrics.GenEvalRecord] = []
        dsv_records: list[metrics.GenEvalRecord] = []
        for idx, (d, tie_out) in enumerate(zip(usable, extractions)):
            tr = d.transition
            if tr.domain == Domain.UNK:
                continue  # no gold transition sentence to score
            gold_domain_prompt = TransitionPrompt(KIND_DOMAIN, TransitionInfo(domain=tr.domain))
            gold_dsv_prompt = (
                TransitionPrompt(KIND_DSV, TransitionInfo(domain=tr.domain, slot=tr.slot, value=tr.value))
                if tr.slot != Slot.UNK and tr.value
                else None
            )
            context = context_text(d.turns, tr.turn_index, self.generator.cfg.max_context_turns, acts=None)
            trace: dict = {"id": d.id, "tie": tie_out.info.as_dict(), "flags": list(tie_out.flags)}

            # Domain-guided section.
            if prompt_source == "gold":
                domain_prompt: TransitionPrompt | None = gold_domain_prompt
            else:
                domain_prompt = (
                    TransitionPrompt(KIND_DOMAIN, TransitionInfo(domain=tie_out.info.domain))
                    if tie_out.info.domain != Domain.UNK
                    else None
                )
            if domain_prompt is not None:
                gen = torch.Generator()
                gen.manual_seed(seed * 7_919 + idx * 4 + 1)
                generated = generate_text(
                    self.generator,
                    self.gen_tokenizer,
                    f"{build_prompt(domain_prompt)} {context}",
                    self.presets["transition"],
                    use_adapters=True,
                    max_new_tokens=self.max_new_tokens,
                    generator=gen,
                )
                domain_records.append(
                    metrics.GenEvalRecord(generated=generated, prompt=domain_prompt, mode="transition")
                )
                trace["domain_prompt"] = build_prompt(domain_prompt)
                trace["domain_generation"] = generated
            else:
                # Extraction missed: scored as a failure against the gold prompt.
                domain_records.append(metrics.GenEvalRecord(generated="", prompt=gold_domain_prompt, mode="transition"))
                trace["domain_generation"] = None

            # Domain-slot-value section (only where gold has a full triple).
            if gold_dsv_prompt is not None:
                if prompt_source == "gold":
                    dsv_prompt: TransitionPrompt | None = gold_dsv_prompt
                else:
                    dsv_prompt = (
                        TransitionPrompt(KIND_DSV, tie_out.info)
                        if tie_out.info.domain != Domain.UNK
                        and tie_out.info.slot != Slot.UNK
                        and tie_out.info.value
                        else None
                    )
                if dsv_prompt is not None:
                    gen = torch.Generator()
                    gen.manual_seed(seed * 7_919 + idx * 4 + 2)
                    generated = generate_text(
                        self.generator,
                        self.gen_tokenizer,
                        f"{build_prompt(dsv_prompt)} {context}",
                        self.presets["transition"],
                        use_adapters=True,
                        max_new_tokens=self.max_new_tokens,
                        generator=gen,
                    )
                    dsv_records.append(metrics.GenEvalRecord(generated=generated, prompt=dsv_prompt, mode="transition"))
                    trace["dsv_prompt"] = build_prompt(dsv_prompt)
                    trace["dsv_generation"] = generated
                else:
                    dsv_records.append(metrics.GenEvalRecord(generated="", prompt=gold_dsv_prompt, mode="transition"))
                    trace["dsv_generation"] = None
            traces.append(trace)

        generation: dict = {}
        if domain_records:
            generation["domain_ts"] = {
                "n": len(domain_records),
                "transition_accuracy": metrics.transition_accuracy(domain_records),
                "d_accuracy": metrics.d_accuracy(domain_records),
            }
        if dsv_records:
            generation["dsv_ts"] = {
                "n": len(dsv_records),
                "transition_accuracy": metrics.transition_accuracy(dsv_records),
                "d_accuracy": metrics.d_accuracy(dsv_records),
                "dv_accuracy": metrics.dv_accuracy(dsv_records),
            }
        report["generation"] = generation
        report["traces"] = traces
        if report_path is not None:
            Path(report_path).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
        return report
