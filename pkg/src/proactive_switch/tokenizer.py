"""Word-level tokenizer with atomic special tokens.

Values in the synthetic corpus are drawn from the training vocabulary, so
word-level tokens plus an unknown marker keep slot filling well-posed without
subword modeling.
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path
from typing import Iterable

PAD_TOKEN = "[PAD]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
USER_TOKEN = "[USER]"
SYSTEM_TOKEN = "[SYSTEM]"
TRANSITION_TOKEN = "[TRANSITION]"
END_TOKEN = "[END]"
UNK_TOKEN = "[UNK]"

# Fixed order; vocabulary files list these first.
SPECIAL_TOKENS: tuple[str, ...] = (
    PAD_TOKEN,
    CLS_TOKEN,
    SEP_TOKEN,
    USER_TOKEN,
    SYSTEM_TOKEN,
    TRANSITION_TOKEN,
    END_TOKEN,
    UNK_TOKEN,
)

_SPECIAL_SET = frozenset(SPECIAL_TOKENS)
_SPECIAL_RE = re.compile("(" + "|".join(re.escape(t) for t in SPECIAL_TOKENS) + ")")
_WORD_RE = re.compile(r"[a-z0-9]+(?:'[a-z0-9]+)?|[^\sa-z0-9]")


def split_text(text: str) -> list[str]:
    """Lowercased word/punctuation tokens; bracketed specials stay atomic."""
    out: list[str] = []
    for chunk in _SPECIAL_RE.split(text):
        if not chunk:
            continue
        if chunk in _SPECIAL_SET:
            out.append(chunk)
        else:
            out.extend(_WORD_RE.findall(chunk.lower()))
    return out


def normalize_text(text: str) -> str:
    return " ".join(split_text(text))


class Tokenizer:
    """Vocabulary-backed encoder/decoder over split_text tokens."""

    def __init__(self, vocab: Iterable[str]):
        tokens = list(vocab)
        if tuple(tokens[: len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise ValueError("vocabulary must start with the special tokens in fixed order")
        if len(set(tokens)) != len(tokens):
            raise ValueError("vocabulary contains duplicates")
        self._tokens = tokens
        self._ids = {tok: i for i, tok in enumerate(tokens)}
        self.pad_id = self._ids[PAD_TOKEN]
        self.cls_id = self._ids[CLS_TOKEN]
        self.sep_id = self._ids[SEP_TOKEN]
        self.user_id = self._ids[USER_TOKEN]
        self.system_id = self._ids[SYSTEM_TOKEN]
        self.transition_id = self._ids[TRANSITION_TOKEN]
        self.end_id = self._ids[END_TOKEN]
        self.unk_id = self._ids[UNK_TOKEN]

    @classmethod
    def build(cls, texts: Iterable[str]) -> "Tokenizer":
        """Deterministic vocabulary: specials first, then sorted unique words."""
        words: set[str] = set()
        for text in texts:
            for tok in split_text(text):
                if tok not in _SPECIAL_SET:
                    words.add(tok)
        return cls(list(SPECIAL_TOKENS) + sorted(words))

    @property
    def vocab_size(self) -> int:
        return len(self._tokens)

    @property
    def vocab(self) -> list[str]:
        return list(self._tokens)

    def token_to_id(self, token: str) -> int:
        return self._ids.get(token, self.unk_id)

    def id_to_token(self, index: int) -> str:
        return self._tokens[index]

    def tokens_to_ids(self, tokens: Iterable[str]) -> list[int]:
        return [self._ids.get(t, self.unk_id) for t in tokens]

    def encode(self, text: str) -> list[int]:
        return self.tokens_to_ids(split_text(text))

    def decode(self, ids: Iterable[int], skip_specials: bool = False) -> str:
        toks = [self._tokens[i] for i in ids]
        if skip_specials:
            toks = [t for t in toks if t not in _SPECIAL_SET]
        return " ".join(toks)

    def sha256(self) -> str:
        digest = hashlib.sha256("\n".join(self._tokens).encode("utf-8"))
        return digest.hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self._tokens) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Tokenizer":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([line for line in lines if line])
