"""Transition-sentence template banks, realization, and dialogue augmentation.

Bank files are JSON or TOML with sections keyed "domain.<name>" and
"pair.<domain>.<slot>", each holding a list of pattern strings. Domain-slot
patterns contain the placeholder "[VALUE]" exactly once; domain patterns
contain none.
"""

from __future__ import annotations

import json
import random
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .corpus import Dialogue, clone_dialogue
from .labels import Domain, Slot, pair_name
from .tokenizer import TRANSITION_TOKEN

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

VALUE_PLACEHOLDER = "[VALUE]"

AUGMENT_DOMAIN = "domain"
AUGMENT_DSV = "domain_slot_value"
AUGMENT_MODES = (AUGMENT_DOMAIN, AUGMENT_DSV)


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class Template:
    key: str  # "train" or "train-destination"
    pattern: str

    @property
    def has_value_slot(self) -> bool:
        return VALUE_PLACEHOLDER in self.pattern


def _check_template(key: str, pattern: str, expect_value: bool, where: str) -> Template:
    if not pattern.strip():
        raise TemplateError(f"{where}: empty pattern")
    count = pattern.count(VALUE_PLACEHOLDER)
    if expect_value and count != 1:
        raise TemplateError(f"{where}: domain-slot pattern must contain {VALUE_PLACEHOLDER} exactly once, found {count}")
    if not expect_value and count != 0:
        raise TemplateError(f"{where}: domain pattern must not contain {VALUE_PLACEHOLDER}")
    return Template(key=key, pattern=pattern)


class TemplateBank:
    """Immutable map from domain / domain-slot keys to template lists."""

    def __init__(
        self,
        domain_templates: dict[Domain, list[Template]],
        pair_templates: dict[tuple[Domain, Slot], list[Template]],
    ):
        if not domain_templates and not pair_templates:
            raise TemplateError("no templates")
        for domain, templates in domain_templates.items():
            if domain == Domain.UNK:
                raise TemplateError("UNK domain cannot be a template key")
            if not templates:
                raise TemplateError(f"empty template list for domain {domain.value}")
        for (domain, slot), templates in pair_templates.items():
            if not templates:
                raise TemplateError(f"empty template list for pair {pair_name(domain, slot)}")
        self._domain = {k: tuple(v) for k, v in domain_templates.items()}
        self._pair = {k: tuple(v) for k, v in pair_templates.items()}

    def domain_templates(self, domain: Domain) -> tuple[Template, ...]:
        try:
            return self._domain[domain]
        except KeyError:
            raise TemplateError(f"no templates for domain key {domain.value!r}") from None

    def pair_templates(self, domain: Domain, slot: Slot) -> tuple[Template, ...]:
        try:
            return self._pair[(domain, slot)]
        except KeyError:
            raise TemplateError(f"no templates for pair key {pair_name(domain, slot)!r}") from None

    def counts(self) -> dict[str, int]:
        out = {d.value: len(ts) for d, ts in self._domain.items()}
        out.update({pair_name(d, s): len(ts) for (d, s), ts in self._pair.items()})
        return out

    def all_patterns(self) -> list[str]:
        pats = [t.pattern for ts in self._domain.values() for t in ts]
        pats += [t.pattern for ts in self._pair.values() for t in ts]
        return pats

    def to_sections(self) -> dict[str, list[str]]:
        sections: dict[str, list[str]] = {}
        for domain, templates in sorted(self._domain.items(), key=lambda kv: kv[0].value):
            sections[f"domain.{domain.value}"] = [t.pattern for t in templates]
        for (domain, slot), templates in sorted(self._pair.items(), key=lambda kv: pair_name(*kv[0])):
            sections[f"pair.{domain.value}.{slot.value}"] = [t.pattern for t in templates]
        return sections


def realize(template: Template, value: str | None = None) -> str:
    """Substitute [VALUE] once; domain templates pass through unchanged."""
    if template.has_value_slot:
        if value is None:
            raise TemplateError(f"template {template.key!r} requires a value")
        return template.pattern.replace(VALUE_PLACEHOLDER, value, 1)
    if value is not None:
        raise TemplateError(f"template {template.key!r} takes no value")
    return template.pattern


@dataclass(frozen=True)
class AugmentedDialogue:
    dialogue: Dialogue
    kind: str
    template: Template
    sentence: str


def augment(d: Dialogue, bank: TemplateBank, mode: str, rng: random.Random) -> AugmentedDialogue:
    """Append a realized transition sentence to the transition-turn response.

    The chosen template is drawn uniformly; the rewritten turn becomes
    "<original response> [TRANSITION] <transition sentence>".
    """
    if mode not in AUGMENT_MODES:
        raise ValueError(f"mode must be one of {AUGMENT_MODES}")
    tr = d.transition
    if tr.domain == Domain.UNK:
        raise TemplateError(f"dialogue {d.id}: cannot augment an UNK-domain dialogue")
    if mode == AUGMENT_DSV:
        if tr.slot == Slot.UNK or not tr.value:
            raise TemplateError(f"dialogue {d.id}: domain_slot_value augmentation requires slot and value")
        candidates = bank.pair_templates(tr.domain, tr.slot)
        template = candidates[rng.randrange(len(candidates))]
        sentence = realize(template, tr.value)
    else:
        candidates = bank.domain_templates(tr.domain)
        template = candidates[rng.randrange(len(candidates))]
        sentence = realize(template)

    out = clone_dialogue(d)
    turn = out.turns[tr.turn_index]
    turn.text = f"{turn.text} {TRANSITION_TOKEN} {sentence}"
    out.augmented_kind = mode
    return AugmentedDialogue(dialogue=out, kind=mode, template=template, sentence=sentence)


def _bank_from_sections(sections: dict) -> TemplateBank:
    domain_templates: dict[Domain, list[Template]] = {}
    pair_templates: dict[tuple[Domain, Slot], list[Template]] = {}
    for key, patterns in sections.items():
        if not isinstance(patterns, list) or not all(isinstance(p, str) for p in patterns):
            raise TemplateError(f"section {key!r} must hold a list of strings")
        parts = key.split(".")
        if parts[0] == "domain" and len(parts) == 2:
            domain = Domain.parse(parts[1])
            domain_templates[domain] = [
                _check_template(domain.value, p, expect_value=False, where=f"{key}[{i}]")
                for i, p in enumerate(patterns)
            ]
        elif parts[0] == "pair" and len(parts) == 3:
            domain, slot = Domain.parse(parts[1]), Slot.parse(parts[2])
            name = pair_name(domain, slot)
            pair_templates[(domain, slot)] = [
                _check_template(name, p, expect_value=True, where=f"{key}[{i}]")
                for i, p in enumerate(patterns)
            ]
        else:
            raise TemplateError(f"unrecognized section key {key!r} (want 'domain.<d>' or 'pair.<d>.<s>')")
    return TemplateBank(domain_templates, pair_templates)


def load_bank(path: str | Path) -> TemplateBank:
    path = Path(path)
    if path.suffix.lower() == ".toml":
        with open(path, "rb") as fh:
            sections = tomllib.load(fh)
    else:
        try:
            sections = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise TemplateError(f"invalid JSON in {path} at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(sections, dict) or not sections:
        raise TemplateError(f"{path}: no templates")
    return _bank_from_sections(sections)


def save_bank(bank: TemplateBank, path: str | Path) -> None:
    Path(path).write_text(json.dumps(bank.to_sections(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def default_bank() -> TemplateBank:
    """The shipped bank (per-key counts match the documented defaults)."""
    text = resources.files("proactive_switch.data").joinpath("templates_default.json").read_text("utf-8")
    return _bank_from_sections(json.loads(text))
