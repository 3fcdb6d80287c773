"""Domain/slot label spaces, the IOB tag dictionary, and span utilities."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence


class Domain(str, enum.Enum):
    UNK = "UNK"
    TRAIN = "train"
    RESTAURANT = "restaurant"
    ATTRACTION = "attraction"
    TAXI = "taxi"

    @classmethod
    def parse(cls, raw: str) -> "Domain":
        try:
            return cls(raw)
        except ValueError:
            allowed = ", ".join(d.value for d in cls)
            raise ValueError(f"unknown domain {raw!r} (expected one of: {allowed})") from None


class Slot(str, enum.Enum):
    UNK = "UNK"
    DAY = "day"
    DESTINATION = "destination"
    DEPARTURE = "departure"
    FOOD = "food"
    NAME = "name"
    TYPE = "type"

    @classmethod
    def parse(cls, raw: str) -> "Slot":
        try:
            return cls(raw)
        except ValueError:
            allowed = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown slot {raw!r} (expected one of: {allowed})") from None


# The nine domain-slot combinations that can carry a value span.
DOMAIN_SLOT_PAIRS: tuple[tuple[Domain, Slot], ...] = (
    (Domain.TRAIN, Slot.DAY),
    (Domain.TRAIN, Slot.DESTINATION),
    (Domain.TRAIN, Slot.DEPARTURE),
    (Domain.RESTAURANT, Slot.FOOD),
    (Domain.RESTAURANT, Slot.NAME),
    (Domain.ATTRACTION, Slot.TYPE),
    (Domain.ATTRACTION, Slot.NAME),
    (Domain.TAXI, Slot.DESTINATION),
    (Domain.TAXI, Slot.DEPARTURE),
)


def pair_name(domain: Domain, slot: Slot) -> str:
    return f"{domain.value}-{slot.value}"


def parse_pair(name: str) -> tuple[Domain, Slot]:
    domain_raw, _, slot_raw = name.partition("-")
    pair = (Domain.parse(domain_raw), Slot.parse(slot_raw))
    if pair not in DOMAIN_SLOT_PAIRS:
        raise ValueError(f"{name!r} is not a known domain-slot pair")
    return pair


PAD_TAG = "[PAD]"
CLS_TAG = "[CLS]"
SEP_TAG = "[SEP]"
OUT_TAG = "O"


class TagDictionary:
    """Bidirectional index over the 22 slot-filling tags.

    Layout: [PAD], [CLS], [SEP], O, then B-/I- tags for each of the nine
    domain-slot pairs, in DOMAIN_SLOT_PAIRS order.
    """

    def __init__(self) -> None:
        tags = [PAD_TAG, CLS_TAG, SEP_TAG, OUT_TAG]
        for domain, slot in DOMAIN_SLOT_PAIRS:
            tags.append(f"B-{pair_name(domain, slot)}")
            tags.append(f"I-{pair_name(domain, slot)}")
        self._tags: tuple[str, ...] = tuple(tags)
        self._index = {tag: i for i, tag in enumerate(tags)}

    def __len__(self) -> int:
        return len(self._tags)

    @property
    def tags(self) -> tuple[str, ...]:
        return self._tags

    def to_index(self, tag: str) -> int:
        try:
            return self._index[tag]
        except KeyError:
            raise ValueError(f"unknown tag {tag!r}") from None

    def from_index(self, index: int) -> str:
        if not 0 <= index < len(self._tags):
            raise ValueError(f"tag index {index} out of range")
        return self._tags[index]

    @property
    def pad_index(self) -> int:
        return 0

    def begin(self, domain: Domain, slot: Slot) -> str:
        return f"B-{pair_name(domain, slot)}"

    def inside(self, domain: Domain, slot: Slot) -> str:
        return f"I-{pair_name(domain, slot)}"

    def pair_of(self, tag: str) -> tuple[Domain, Slot] | None:
        """Domain-slot pair for a B-/I- tag, None for specials and O."""
        if tag.startswith("B-") or tag.startswith("I-"):
            return parse_pair(tag[2:])
        return None

    def banned_start(self, index: int) -> bool:
        """A path may not start inside a span."""
        return self._tags[index].startswith("I-")

    def banned_transition(self, prev_index: int, next_index: int) -> bool:
        """Transitions into I-x are only legal from B-x or I-x."""
        nxt = self._tags[next_index]
        if not nxt.startswith("I-"):
            return False
        prev = self._tags[prev_index]
        return prev not in (f"B-{nxt[2:]}", nxt)


def iob_spans(tags: Sequence[str]) -> list[tuple[str, int, int]]:
    """Extract (pair-name, start, end) spans from an IOB tag sequence.

    Strict reading: a span opens only at B-; an I- that does not continue a
    span of the same pair is ignored. End index is inclusive.
    """
    spans: list[tuple[str, int, int]] = []
    open_pair: str | None = None
    start = -1
    for i, tag in enumerate(tags):
        if tag.startswith("B-"):
            if open_pair is not None:
                spans.append((open_pair, start, i - 1))
            open_pair = tag[2:]
            start = i
        elif tag.startswith("I-") and open_pair == tag[2:]:
            continue
        else:
            if open_pair is not None:
                spans.append((open_pair, start, i - 1))
                open_pair = None
    if open_pair is not None:
        spans.append((open_pair, start, len(tags) - 1))
    return spans


@dataclass(frozen=True)
class TransitionInfo:
    """Extracted (domain, slot, value) triple; domain/slot may be UNK."""

    domain: Domain = Domain.UNK
    slot: Slot = Slot.UNK
    value: str | None = None

    def as_dict(self) -> dict:
        return {"domain": self.domain.value, "slot": self.slot.value, "value": self.value}
