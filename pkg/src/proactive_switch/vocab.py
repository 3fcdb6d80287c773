"""Training-vocabulary construction.

The generator's vocabulary must cover template words and prompt syntax up
front: adapter tuning later extends a frozen base whose embedding size cannot
change.
"""

from __future__ import annotations

from .corpus import Dialogue, corpus_texts
from .labels import Domain, Slot
from .templates import TemplateBank, VALUE_PLACEHOLDER
from .tokenizer import Tokenizer

# Words appearing in rendered transition prompts.
_PROMPT_SYNTAX = "( domain = slot value , )"


def build_training_vocab(dialogues: list[Dialogue], bank: TemplateBank | None = None) -> Tokenizer:
    texts = corpus_texts(dialogues)
    texts.append(_PROMPT_SYNTAX)
    texts.extend(d.value for d in Domain if d != Domain.UNK)
    texts.extend(s.value for s in Slot if s != Slot.UNK)
    if bank is not None:
        texts.extend(p.replace(VALUE_PLACEHOLDER, " ") for p in bank.all_patterns())
    return Tokenizer.build(texts)
