"""Deterministic synthetic-corpus generation.

Dialogues follow the Prepended shape: a chitchat prefix of user/system
exchanges (one user turn mentions the annotated value, except for UNK
dialogues) followed by a short task suffix with a serialized act string.
Identical (spec, seed) inputs produce byte-identical corpora.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import (
    MODE_CHITCHAT,
    MODE_TASK,
    SPEAKER_SYSTEM,
    SPEAKER_USER,
    Dialogue,
    TransitionAnnotation,
    Turn,
)
from .labels import Domain, Slot, parse_pair


class SynthSpecError(ValueError):
    pass


@dataclass
class PairSpec:
    values: list[str]
    chitchat_frames: list[str]
    task_user: list[str]
    task_system: list[str]
    acts: str
    # Optional second exchange; its response echoes the value from turns back.
    task_user_2: list[str] = field(default_factory=list)
    task_system_2: list[str] = field(default_factory=list)
    acts_2: str = ""


@dataclass
class SynthSpec:
    pairs: dict[str, PairSpec]
    generic_user: list[str]
    generic_system: list[str]
    n_dialogues: int = 500
    unk_fraction: float = 0.2
    min_exchanges: int = 2
    max_exchanges: int = 3
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)

    def validate(self) -> None:
        if not self.pairs:
            raise SynthSpecError("spec lists no domain-slot pairs")
        for name, pair in self.pairs.items():
            parse_pair(name)
            if not pair.values:
                raise SynthSpecError(f"empty value vocabulary for pair {name!r}")
            if not pair.chitchat_frames or not pair.task_user or not pair.task_system:
                raise SynthSpecError(f"pair {name!r} is missing frames")
            for frame in pair.chitchat_frames + pair.task_user:
                if frame.count("{value}") != 1:
                    raise SynthSpecError(f"frame {frame!r} must contain {{value}} exactly once")
        if not self.generic_user or not self.generic_system:
            raise SynthSpecError("generic chitchat frames are required")
        if not 0.0 <= self.unk_fraction <= 1.0:
            raise SynthSpecError("unk_fraction must be in [0, 1]")
        if not 1 <= self.min_exchanges <= self.max_exchanges:
            raise SynthSpecError("bad exchange bounds")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise SynthSpecError("split fractions must sum to 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "SynthSpec":
        pairs = {
            name: PairSpec(
                values=list(p["values"]),
                chitchat_frames=list(p["chitchat_frames"]),
                task_user=list(p["task_user"]),
                task_system=list(p["task_system"]),
                acts=p["acts"],
                task_user_2=list(p.get("task_user_2", [])),
                task_system_2=list(p.get("task_system_2", [])),
                acts_2=p.get("acts_2", ""),
            )
            for name, p in raw["pairs"].items()
        }
        spec = cls(
            pairs=pairs,
            generic_user=list(raw["generic_user"]),
            generic_system=list(raw["generic_system"]),
            n_dialogues=int(raw.get("n_dialogues", 500)),
            unk_fraction=float(raw.get("unk_fraction", 0.2)),
            min_exchanges=int(raw.get("min_exchanges", 2)),
            max_exchanges=int(raw.get("max_exchanges", 3)),
            split_fractions=tuple(raw.get("split_fractions", (0.8, 0.1, 0.1))),
        )
        spec.validate()
        return spec

    @classmethod
    def load(cls, path: str | Path) -> "SynthSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def default(cls) -> "SynthSpec":
        text = resources.files("proactive_switch.data").joinpath("synth_default.json").read_text("utf-8")
        return cls.from_dict(json.loads(text))


def _split_assignment(n: int, fractions: tuple[float, float, float], rng: random.Random) -> list[str]:
    n_train = round(n * fractions[0])
    n_valid = round(n * fractions[1])
    n_test = n - n_train - n_valid
    splits = ["train"] * n_train + ["valid"] * n_valid + ["test"] * n_test
    rng.shuffle(splits)
    return splits


def synth_generate(spec: SynthSpec, seed: int, n: int | None = None) -> list[Dialogue]:
    """Generate a corpus of n dialogues (default spec.n_dialogues)."""
    spec.validate()
    n = spec.n_dialogues if n is None else n
    rng = random.Random(seed)
    splits = _split_assignment(n, spec.split_fractions, rng)
    pair_names = sorted(spec.pairs)

    dialogues: list[Dialogue] = []
    for i in range(n):
        is_unk = rng.random() < spec.unk_fraction
        pair_key = pair_names[rng.randrange(len(pair_names))]
        pair = spec.pairs[pair_key]
        domain, slot = parse_pair(pair_key)
        value = pair.values[rng.randrange(len(pair.values))]

        n_exchanges = rng.randint(spec.min_exchanges, spec.max_exchanges)
        value_exchange = rng.randrange(n_exchanges)

        turns: list[Turn] = []
        for e in range(n_exchanges):
            if not is_unk and e == value_exchange:
                frame = pair.chitchat_frames[rng.randrange(len(pair.chitchat_frames))]
                user_text = frame.replace("{value}", value)
            else:
                user_text = spec.generic_user[rng.randrange(len(spec.generic_user))]
            turns.append(Turn(SPEAKER_USER, user_text, MODE_CHITCHAT))
            turns.append(Turn(SPEAKER_SYSTEM, spec.generic_system[rng.randrange(len(spec.generic_system))], MODE_CHITCHAT))

        task_user = pair.task_user[rng.randrange(len(pair.task_user))].replace("{value}", value)
        task_system = pair.task_system[rng.randrange(len(pair.task_system))].replace("{value}", value)
        acts = pair.acts.replace("{value}", value)
        turns.append(Turn(SPEAKER_USER, task_user, MODE_TASK))
        turns.append(Turn(SPEAKER_SYSTEM, task_system, MODE_TASK, acts=acts))
        if pair.task_user_2 and pair.task_system_2:
            task_user_2 = pair.task_user_2[rng.randrange(len(pair.task_user_2))]
            task_system_2 = pair.task_system_2[rng.randrange(len(pair.task_system_2))].replace("{value}", value)
            turns.append(Turn(SPEAKER_USER, task_user_2, MODE_TASK))
            turns.append(Turn(SPEAKER_SYSTEM, task_system_2, MODE_TASK, acts=pair.acts_2 or None))

        transition_index = 2 * n_exchanges - 1
        if is_unk:
            annotation = TransitionAnnotation(domain=Domain.UNK, slot=Slot.UNK, turn_index=transition_index)
        else:
            annotation = TransitionAnnotation(
                domain=domain,
                slot=slot,
                turn_index=transition_index,
                value=value,
                value_turn=2 * value_exchange,
            )
        dialogues.append(
            Dialogue(id=f"synth-{i:05d}", split=splits[i], turns=turns, transition=annotation)
        )
    return dialogues
