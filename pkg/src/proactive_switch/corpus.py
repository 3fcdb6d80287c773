"""Dialogue data model, JSON ingestion/serialization, IOB example derivation.

Corpus files are a single JSON object:

    {"dialogues": [{"id", "split", "turns": [{"speaker", "text", "mode", "acts"?}],
                    "transition": {"domain", "slot", "value"?, "turn_index", "value_turn"?},
                    "augmented_kind"?}]}
"""

from __future__ import annotations

import copy
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .labels import DOMAIN_SLOT_PAIRS, CLS_TAG, OUT_TAG, SEP_TAG, Domain, Slot, TagDictionary
from .tokenizer import CLS_TOKEN, SEP_TOKEN, Tokenizer, split_text

log = logging.getLogger(__name__)

SPEAKER_USER = "user"
SPEAKER_SYSTEM = "system"
MODE_CHITCHAT = "chitchat"
MODE_TASK = "task"
SPLITS = ("train", "valid", "test")


class CorpusError(ValueError):
    """Malformed corpus file: bad JSON, missing keys, wrong types."""

    def __init__(self, message: str, dialogue_id: str | None = None, field_name: str | None = None):
        where = ""
        if dialogue_id is not None:
            where += f" [dialogue {dialogue_id}]"
        if field_name is not None:
            where += f" [field {field_name}]"
        super().__init__(message + where)
        self.dialogue_id = dialogue_id
        self.field_name = field_name


class DialogueInvariantError(ValueError):
    """A structurally parsable dialogue that violates the data invariants."""


class IobDerivationError(ValueError):
    """Annotated value not contiguously matchable in the tokenized context."""


@dataclass
class Turn:
    speaker: str
    text: str
    mode: str
    acts: str | None = None


@dataclass
class TransitionAnnotation:
    domain: Domain
    slot: Slot
    turn_index: int
    value: str | None = None
    value_turn: int | None = None


@dataclass
class Dialogue:
    id: str
    split: str
    turns: list[Turn]
    transition: TransitionAnnotation
    augmented_kind: str | None = None

    @property
    def chitchat_prefix_len(self) -> int:
        return self.transition.turn_index + 1


@dataclass
class IngestReport:
    split_sizes: dict[str, int] = field(default_factory=dict)
    rejected: list[tuple[str, str]] = field(default_factory=list)

    @property
    def accepted(self) -> int:
        return sum(self.split_sizes.values())


def _require(raw: dict, key: str, kind, dialogue_id: str | None, where: str):
    if key not in raw:
        raise CorpusError(f"missing key {key!r} in {where}", dialogue_id, key)
    value = raw[key]
    if not isinstance(value, kind):
        raise CorpusError(
            f"{where}.{key} must be {getattr(kind, '__name__', kind)}, got {type(value).__name__}",
            dialogue_id,
            key,
        )
    return value


def _parse_turn(raw: dict, dialogue_id: str, index: int) -> Turn:
    where = f"turns[{index}]"
    speaker = _require(raw, "speaker", str, dialogue_id, where)
    text = _require(raw, "text", str, dialogue_id, where)
    mode = _require(raw, "mode", str, dialogue_id, where)
    if speaker not in (SPEAKER_USER, SPEAKER_SYSTEM):
        raise CorpusError(f"{where}.speaker must be 'user' or 'system'", dialogue_id, "speaker")
    if mode not in (MODE_CHITCHAT, MODE_TASK):
        raise CorpusError(f"{where}.mode must be 'chitchat' or 'task'", dialogue_id, "mode")
    acts = raw.get("acts")
    if acts is not None and not isinstance(acts, str):
        raise CorpusError(f"{where}.acts must be a string when present", dialogue_id, "acts")
    return Turn(speaker=speaker, text=text, mode=mode, acts=acts)


def _parse_dialogue(raw: dict) -> Dialogue:
    if not isinstance(raw, dict):
        raise CorpusError("dialogue entry must be an object")
    dialogue_id = _require(raw, "id", str, None, "dialogue")
    split = _require(raw, "split", str, dialogue_id, "dialogue")
    if split not in SPLITS:
        raise CorpusError(f"split must be one of {SPLITS}", dialogue_id, "split")
    turns_raw = _require(raw, "turns", list, dialogue_id, "dialogue")
    turns = [_parse_turn(t, dialogue_id, i) for i, t in enumerate(turns_raw)]
    tr_raw = _require(raw, "transition", dict, dialogue_id, "dialogue")
    turn_index = _require(tr_raw, "turn_index", int, dialogue_id, "transition")
    value = tr_raw.get("value")
    if value is not None and not isinstance(value, str):
        raise CorpusError("transition.value must be a string when present", dialogue_id, "value")
    value_turn = tr_raw.get("value_turn")
    if value_turn is not None and not isinstance(value_turn, int):
        raise CorpusError("transition.value_turn must be an integer when present", dialogue_id, "value_turn")
    domain_raw = _require(tr_raw, "domain", str, dialogue_id, "transition")
    slot_raw = _require(tr_raw, "slot", str, dialogue_id, "transition")
    # Out-of-enum domains/slots (e.g. one-off labels in source data) are
    # invariant violations, handled by rejection rather than a hard error.
    try:
        domain = Domain.parse(domain_raw)
        slot = Slot.parse(slot_raw)
    except ValueError as exc:
        raise DialogueInvariantError(str(exc)) from None
    augmented_kind = raw.get("augmented_kind")
    if augmented_kind is not None and not isinstance(augmented_kind, str):
        raise CorpusError("augmented_kind must be a string when present", dialogue_id, "augmented_kind")
    return Dialogue(
        id=dialogue_id,
        split=split,
        turns=turns,
        transition=TransitionAnnotation(
            domain=domain, slot=slot, turn_index=turn_index, value=value, value_turn=value_turn
        ),
        augmented_kind=augmented_kind,
    )


def _tokens_contain(haystack: list[str], needle: list[str]) -> bool:
    if not needle or len(needle) > len(haystack):
        return False
    return any(haystack[i : i + len(needle)] == needle for i in range(len(haystack) - len(needle) + 1))


def validate_dialogue(d: Dialogue) -> None:
    """Raise DialogueInvariantError on any violated dialogue invariant."""
    if not d.turns:
        raise DialogueInvariantError("dialogue has no turns")
    for i, turn in enumerate(d.turns):
        expected = SPEAKER_USER if i % 2 == 0 else SPEAKER_SYSTEM
        if turn.speaker != expected:
            raise DialogueInvariantError(f"turns must alternate user/system starting with user (turn {i})")
        if not turn.text.strip():
            raise DialogueInvariantError(f"turn {i} text is empty")
        if turn.acts is not None and turn.mode != MODE_TASK:
            raise DialogueInvariantError(f"turn {i} carries acts but is not task mode")

    modes = [t.mode for t in d.turns]
    try:
        first_task = modes.index(MODE_TASK)
    except ValueError:
        raise DialogueInvariantError("dialogue has no task suffix") from None
    if first_task == 0:
        raise DialogueInvariantError("dialogue has no chitchat prefix")
    if any(m != MODE_TASK for m in modes[first_task:]):
        raise DialogueInvariantError("chitchat prefix must be contiguous and followed only by task turns")
    if first_task % 2 != 0:
        raise DialogueInvariantError("chitchat prefix must end with a system turn")

    tr = d.transition
    if tr.turn_index != first_task - 1:
        raise DialogueInvariantError(
            f"transition.turn_index must point at the last chitchat system turn "
            f"({first_task - 1}), got {tr.turn_index}"
        )

    if tr.domain == Domain.UNK:
        if tr.slot != Slot.UNK:
            raise DialogueInvariantError("UNK domain requires UNK slot")
        if tr.value is not None:
            raise DialogueInvariantError("UNK domain must not carry a value")
        return

    if tr.slot == Slot.UNK:
        if tr.value is not None:
            raise DialogueInvariantError("UNK slot must not carry a value")
        return

    if (tr.domain, tr.slot) not in DOMAIN_SLOT_PAIRS:
        raise DialogueInvariantError(f"({tr.domain.value}, {tr.slot.value}) is not a known domain-slot pair")
    if not tr.value or not tr.value.strip():
        raise DialogueInvariantError("non-UNK slot requires a non-empty value")
    if tr.value_turn is None:
        raise DialogueInvariantError("non-UNK slot requires value_turn")
    if not 0 <= tr.value_turn <= tr.turn_index:
        raise DialogueInvariantError("value_turn must lie within the chitchat prefix")
    if d.turns[tr.value_turn].speaker != SPEAKER_USER:
        raise DialogueInvariantError("value_turn must be a user turn")
    if not _tokens_contain(split_text(d.turns[tr.value_turn].text), split_text(tr.value)):
        raise DialogueInvariantError(
            f"value {tr.value!r} does not appear in the user text of turn {tr.value_turn}"
        )


def ingest_with_report(path: str | Path, format: str = "fusedchat_json") -> tuple[list[Dialogue], IngestReport]:
    if format != "fusedchat_json":
        raise ValueError(f"unsupported corpus format {format!r}")
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("dialogues"), list):
        raise CorpusError(f"{path} must be an object with a 'dialogues' list")

    dialogues: list[Dialogue] = []
    report = IngestReport(split_sizes={s: 0 for s in SPLITS})
    for raw in data["dialogues"]:
        try:
            d = _parse_dialogue(raw)
            validate_dialogue(d)
        except DialogueInvariantError as exc:
            dialogue_id = raw.get("id", "?") if isinstance(raw, dict) else "?"
            report.rejected.append((str(dialogue_id), str(exc)))
            log.warning("rejected dialogue %s: %s", dialogue_id, exc)
            continue
        dialogues.append(d)
        report.split_sizes[d.split] += 1
    log.info(
        "ingested %d dialogues (train=%d valid=%d test=%d), rejected %d",
        report.accepted,
        report.split_sizes["train"],
        report.split_sizes["valid"],
        report.split_sizes["test"],
        len(report.rejected),
    )
    return dialogues, report


def ingest(path: str | Path, format: str = "fusedchat_json") -> list[Dialogue]:
    return ingest_with_report(path, format)[0]


def dialogue_to_json(d: Dialogue) -> dict:
    turns = []
    for t in d.turns:
        row: dict = {"speaker": t.speaker, "text": t.text, "mode": t.mode}
        if t.acts is not None:
            row["acts"] = t.acts
        turns.append(row)
    transition: dict = {
        "domain": d.transition.domain.value,
        "slot": d.transition.slot.value,
        "turn_index": d.transition.turn_index,
    }
    if d.transition.value is not None:
        transition["value"] = d.transition.value
    if d.transition.value_turn is not None:
        transition["value_turn"] = d.transition.value_turn
    out: dict = {"id": d.id, "split": d.split, "turns": turns, "transition": transition}
    if d.augmented_kind is not None:
        out["augmented_kind"] = d.augmented_kind
    return out


def save_corpus(dialogues: list[Dialogue], path: str | Path) -> None:
    payload = {"dialogues": [dialogue_to_json(d) for d in dialogues]}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def split_of(dialogues: list[Dialogue], split: str) -> list[Dialogue]:
    return [d for d in dialogues if d.split == split]


@dataclass
class TrainingExample:
    """Tokenized chitchat prefix with aligned IOB tags and head labels."""

    dialogue_id: str
    tokens: list[str]
    token_ids: list[int]
    tag_ids: list[int]
    tags: list[str]
    domain: Domain
    slot: Slot
    value: str | None


def derive_iob(
    d: Dialogue,
    tokenizer: Tokenizer,
    tag_dict: TagDictionary | None = None,
    max_tokens: int = 256,
) -> TrainingExample:
    """Build the slot-filling example for a dialogue's chitchat prefix.

    The context covers every turn before the transition turn, framed as
    [CLS] t0 [SEP] t1 [SEP] ...; when the total exceeds max_tokens, whole
    turns are dropped from the oldest end ([CLS] always kept).
    """
    tag_dict = tag_dict or TagDictionary()
    context = d.turns[: d.transition.turn_index]
    if not context:
        raise IobDerivationError(f"dialogue {d.id} has no context before the transition turn")

    turn_tokens = [split_text(t.text) for t in context]
    kept_from = 0
    total = 1 + sum(len(toks) + 1 for toks in turn_tokens)
    while total > max_tokens and kept_from < len(turn_tokens) - 1:
        total -= len(turn_tokens[kept_from]) + 1
        kept_from += 1
    if total > max_tokens:
        # A single oversized turn: drop its oldest tokens.
        overflow = total - max_tokens
        turn_tokens[kept_from] = turn_tokens[kept_from][overflow:]

    tokens: list[str] = [CLS_TOKEN]
    tags: list[str] = [CLS_TAG]
    spans: dict[int, tuple[int, int]] = {}  # original turn index -> token [start, end)
    for original_index in range(kept_from, len(context)):
        start = len(tokens)
        tokens.extend(turn_tokens[original_index])
        spans[original_index] = (start, len(tokens))
        tags.extend([OUT_TAG] * (len(tokens) - start))
        tokens.append(SEP_TOKEN)
        tags.append(SEP_TAG)

    tr = d.transition
    if tr.slot != Slot.UNK:
        value_tokens = split_text(tr.value or "")
        if tr.value_turn not in spans:
            raise IobDerivationError(
                f"dialogue {d.id}: value turn {tr.value_turn} truncated out of the context window"
            )
        lo, hi = spans[tr.value_turn]
        match_start = -1
        for start in range(hi - len(value_tokens), lo - 1, -1):  # prefer the last occurrence
            if start >= lo and tokens[start : start + len(value_tokens)] == value_tokens:
                match_start = start
                break
        if match_start < 0:
            raise IobDerivationError(
                f"dialogue {d.id}: value tokens {value_tokens!r} not contiguous in turn "
                f"{tr.value_turn} tokens {tokens[lo:hi]!r}"
            )
        tags[match_start] = tag_dict.begin(tr.domain, tr.slot)
        for i in range(match_start + 1, match_start + len(value_tokens)):
            tags[i] = tag_dict.inside(tr.domain, tr.slot)

    return TrainingExample(
        dialogue_id=d.id,
        tokens=tokens,
        token_ids=tokenizer.tokens_to_ids(tokens),
        tag_ids=[tag_dict.to_index(t) for t in tags],
        tags=tags,
        domain=tr.domain,
        slot=tr.slot,
        value=tr.value,
    )


def derive_examples(
    dialogues: list[Dialogue],
    tokenizer: Tokenizer,
    tag_dict: TagDictionary | None = None,
    max_tokens: int = 256,
) -> list[TrainingExample]:
    tag_dict = tag_dict or TagDictionary()
    return [derive_iob(d, tokenizer, tag_dict, max_tokens) for d in dialogues]


def clone_dialogue(d: Dialogue) -> Dialogue:
    return copy.deepcopy(d)


def corpus_texts(dialogues: list[Dialogue]) -> list[str]:
    """Every text the models may see from a corpus (turns, acts, values)."""
    texts: list[str] = []
    for d in dialogues:
        for t in d.turns:
            texts.append(t.text)
            if t.acts:
                texts.append(t.acts)
        if d.transition.value:
            texts.append(d.transition.value)
    return texts


def split_report(dialogues: list[Dialogue]) -> dict[str, int]:
    counts = Counter(d.split for d in dialogues)
    return {s: counts.get(s, 0) for s in SPLITS}
