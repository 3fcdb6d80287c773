"""Structured transition prompts that condition the generator."""

from __future__ import annotations

from dataclasses import dataclass

from ..labels import Domain, Slot, TransitionInfo
from ..tokenizer import TRANSITION_TOKEN

KIND_DOMAIN = "domain_only"
KIND_DSV = "domain_slot_value"
PROMPT_KINDS = (KIND_DOMAIN, KIND_DSV)


class PromptError(ValueError):
    pass


@dataclass(frozen=True)
class TransitionPrompt:
    kind: str
    info: TransitionInfo

    def __post_init__(self) -> None:
        if self.kind not in PROMPT_KINDS:
            raise PromptError(f"unknown prompt kind {self.kind!r}")
        if self.info.domain == Domain.UNK:
            raise PromptError("transition prompts require a non-UNK domain")
        if self.kind == KIND_DSV:
            if self.info.slot == Slot.UNK:
                raise PromptError("domain_slot_value prompts require a non-UNK slot")
            if not self.info.value:
                raise PromptError("domain_slot_value prompts require a value")


def build_prompt(prompt: TransitionPrompt) -> str:
    """Render the prompt prefix with its exact spacing."""
    info = prompt.info
    if prompt.kind == KIND_DOMAIN:
        return f"{TRANSITION_TOKEN} ( domain = {info.domain.value} )"
    return (
        f"{TRANSITION_TOKEN} ( domain = {info.domain.value}, "
        f"slot = {info.slot.value}, value = {info.value} )"
    )


def richest_prompt(info: TransitionInfo) -> TransitionPrompt:
    """Most specific prompt the extracted info supports.

    Falls back from domain-slot-value to domain-only when the slot is UNK or
    no reliable value was extracted.
    """
    if info.slot != Slot.UNK and info.value:
        return TransitionPrompt(KIND_DSV, info)
    return TransitionPrompt(KIND_DOMAIN, TransitionInfo(domain=info.domain))
