"""Generation training examples built from dialogue corpora."""

from __future__ import annotations

from dataclasses import dataclass

from ..corpus import MODE_TASK, SPEAKER_SYSTEM, SPEAKER_USER, Dialogue, Turn
from ..labels import TransitionInfo
from ..templates import AUGMENT_DSV, AugmentedDialogue
from ..tokenizer import END_TOKEN, SYSTEM_TOKEN, TRANSITION_TOKEN, USER_TOKEN
from .prompts import KIND_DOMAIN, KIND_DSV, TransitionPrompt, build_prompt

MODE_TRANSITION = "transition"


@dataclass
class GenExample:
    dialogue_id: str
    input_text: str
    target_text: str
    mode: str  # "chitchat" | "task" | "transition"
    prompt: TransitionPrompt | None = None

    def __post_init__(self) -> None:
        has_marker = TRANSITION_TOKEN in self.target_text
        if has_marker != (self.prompt is not None):
            raise ValueError("prompt must be present exactly when the target carries the transition marker")


def frame_turn(turn: Turn) -> str:
    marker = USER_TOKEN if turn.speaker == SPEAKER_USER else SYSTEM_TOKEN
    return f"{marker} {turn.text}"


def context_window(turns: list[Turn], upto: int, max_turns: int) -> list[Turn]:
    return turns[max(0, upto - max_turns) : upto]


def context_text(turns: list[Turn], upto: int, max_turns: int, acts: str | None) -> str:
    parts = [frame_turn(t) for t in context_window(turns, upto, max_turns)]
    if acts:
        parts.append(acts)
    parts.append(SYSTEM_TOKEN)
    return " ".join(parts)


def unified_examples(dialogues: list[Dialogue], max_context_turns: int = 3) -> list[GenExample]:
    """One LM example per system turn: context (plus acts for task turns) -> response."""
    examples: list[GenExample] = []
    for d in dialogues:
        for j, turn in enumerate(d.turns):
            if turn.speaker != SPEAKER_SYSTEM:
                continue
            acts = turn.acts if turn.mode == MODE_TASK else None
            examples.append(
                GenExample(
                    dialogue_id=d.id,
                    input_text=context_text(d.turns, j, max_context_turns, acts),
                    target_text=f"{turn.text} {END_TOKEN}",
                    mode=turn.mode,
                )
            )
    return examples


def transition_example_from_dialogue(
    d: Dialogue,
    kind: str,
    with_prompt: bool = True,
    max_context_turns: int = 3,
) -> GenExample:
    """Transition-turn example from an augmented dialogue.

    The prompt is always attached as metadata (d/d-v scoring needs it); the
    with_prompt flag only controls whether the prompt text is prepended to the
    model input, which is how the no-transition-prompt baseline is trained.
    """
    tr = d.transition
    prompt_kind = KIND_DSV if kind == AUGMENT_DSV else KIND_DOMAIN
    info = (
        TransitionInfo(domain=tr.domain, slot=tr.slot, value=tr.value)
        if prompt_kind == KIND_DSV
        else TransitionInfo(domain=tr.domain)
    )
    prompt = TransitionPrompt(prompt_kind, info)
    context = context_text(d.turns, tr.turn_index, max_context_turns, acts=None)
    input_text = f"{build_prompt(prompt)} {context}" if with_prompt else context
    target = d.turns[tr.turn_index].text
    return GenExample(
        dialogue_id=d.id,
        input_text=input_text,
        target_text=f"{target} {END_TOKEN}",
        mode=MODE_TRANSITION,
        prompt=prompt,
    )


def transition_example(
    aug: AugmentedDialogue,
    with_prompt: bool = True,
    max_context_turns: int = 3,
) -> GenExample:
    example = transition_example_from_dialogue(aug.dialogue, aug.kind, with_prompt, max_context_turns)
    example.dialogue_id = f"{aug.dialogue.id}#{aug.kind}"
    return example


def transition_examples(
    augmented: list[AugmentedDialogue],
    with_prompt: bool = True,
    max_context_turns: int = 3,
) -> list[GenExample]:
    return [transition_example(a, with_prompt, max_context_turns) for a in augmented]


def transition_examples_from_corpus(
    dialogues: list[Dialogue],
    with_prompt: bool = True,
    max_context_turns: int = 3,
) -> list[GenExample]:
    """Examples from an augmented corpus file (dialogues carry augmented_kind)."""
    return [
        transition_example_from_dialogue(d, d.augmented_kind, with_prompt, max_context_turns)
        for d in dialogues
        if d.augmented_kind
    ]
