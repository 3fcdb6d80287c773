import json
import random

import pytest

from proactive_switch.corpus import dialogue_to_json
from proactive_switch.labels import Domain, Slot
from proactive_switch.templates import (
    AUGMENT_DOMAIN,
    AUGMENT_DSV,
    Template,
    TemplateBank,
    TemplateError,
    augment,
    default_bank,
    load_bank,
    realize,
    save_bank,
)
from tests.test_corpus import fig_dialogue

FIG_TEMPLATE = Template(key="train-destination", pattern="If you want, I can look for a train to [VALUE] for you.")


class TestRealize:
    def test_figure_sentence(self):
        out = realize(FIG_TEMPLATE, "London Kings Cross")
        assert out == "If you want, I can look for a train to London Kings Cross for you."

    def test_domain_template_identity(self):
        t = Template(key="taxi", pattern="Do you need a taxi afterwards?")
        assert realize(t) == t.pattern

    def test_value_containing_placeholder_substituted_once(self):
        out = realize(FIG_TEMPLATE, "x [VALUE] y")
        assert out.count("[VALUE]") == 1
        assert "x [VALUE] y" in out

    def test_missing_value_errors(self):
        with pytest.raises(TemplateError):
            realize(FIG_TEMPLATE)

    def test_superfluous_value_errors(self):
        t = Template(key="taxi", pattern="Need a taxi?")
        with pytest.raises(TemplateError):
            realize(t, "x")

    def test_output_contains_value_iff_value_slot(self, bank):
        for domain in (Domain.TRAIN, Domain.TAXI):
            for t in bank.domain_templates(domain)[:5]:
                assert "zzz" not in realize(t)
        for t in bank.pair_templates(Domain.TRAIN, Slot.DESTINATION)[:5]:
            assert "zzzvalue" in realize(t, "zzzvalue")


class TestShippedBank:
    def test_counts_match_documented_defaults(self, bank):
        counts = bank.counts()
        assert counts["train"] == 95
        assert counts["restaurant"] == 56
        assert counts["attraction"] == 45
        assert counts["taxi"] == 17
        assert counts["train-day"] == 22
        assert counts["train-destination"] == 40
        assert counts["train-departure"] == 35
        assert counts["restaurant-food"] == 45
        assert counts["restaurant-name"] == 11
        assert counts["attraction-type"] == 30
        assert counts["attraction-name"] == 15
        assert counts["taxi-destination"] == 9
        assert counts["taxi-departure"] == 8

    def test_every_template_contains_its_domain_word(self, bank):
        for domain in (Domain.TRAIN, Domain.RESTAURANT, Domain.ATTRACTION, Domain.TAXI):
            for t in bank.domain_templates(domain):
                assert domain.value in t.pattern.lower()

    def test_figure_template_is_shipped(self, bank):
        patterns = [t.pattern for t in bank.pair_templates(Domain.TRAIN, Slot.DESTINATION)]
        assert FIG_TEMPLATE.pattern in patterns


class TestBankIO:
    def test_save_load_round_trip(self, bank, tmp_path):
        path = tmp_path / "bank.json"
        save_bank(bank, path)
        loaded = load_bank(path)
        assert loaded.to_sections() == bank.to_sections()

    def test_empty_file_errors(self, tmp_path):
        path = tmp_path / "bank.json"
        path.write_text("{}")
        with pytest.raises(TemplateError, match="no templates"):
            load_bank(path)

    def test_placeholder_violation_reported(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"pair.train.day": ["no placeholder here"]}))
        with pytest.raises(TemplateError, match=r"pair.train.day\[0\]"):
            load_bank(path)

    def test_domain_template_with_placeholder_rejected(self, tmp_path):
        path = tmp_path / "bad2.json"
        path.write_text(json.dumps({"domain.train": ["take the [VALUE] train"]}))
        with pytest.raises(TemplateError):
            load_bank(path)

    def test_toml_bank_loads(self, tmp_path):
        path = tmp_path / "bank.toml"
        path.write_text('"domain.taxi" = ["Need a taxi?"]\n"pair.taxi.destination" = ["Taxi to [VALUE]?"]\n')
        loaded = load_bank(path)
        assert loaded.counts() == {"taxi": 1, "taxi-destination": 1}

    def test_unknown_section_key_rejected(self, tmp_path):
        path = tmp_path / "bad3.json"
        path.write_text(json.dumps({"misc.train": ["x"]}))
        with pytest.raises(TemplateError, match="section key"):
            load_bank(path)


class TestAugment:
    def test_figure_augmentation(self):
        d = fig_dialogue(value="london kings cross", text="i will enroll at london kings cross next week")
        d.transition.domain, d.transition.slot = Domain.TRAIN, Slot.DESTINATION
        bank = TemplateBank({}, {(Domain.TRAIN, Slot.DESTINATION): [FIG_TEMPLATE]})
        out = augment(d, bank, AUGMENT_DSV, random.Random(0))
        assert out.dialogue.turns[1].text == (
            "i see . [TRANSITION] If you want, I can look for a train to london kings cross for you."
        )

    def test_changes_exactly_one_turn_with_one_marker(self, bank, small_corpus):
        rng = random.Random(1)
        for d in small_corpus[:30]:
            if d.transition.domain == Domain.UNK:
                continue
            out = augment(d, bank, AUGMENT_DOMAIN, rng)
            changed = [
                i for i, (a, b) in enumerate(zip(d.turns, out.dialogue.turns)) if a.text != b.text
            ]
            assert changed == [d.transition.turn_index]
            new_text = out.dialogue.turns[d.transition.turn_index].text
            assert new_text.count("[TRANSITION]") == 1
            assert new_text.startswith(d.turns[d.transition.turn_index].text)

    def test_domain_mode_taxi_contains_taxi(self, bank):
        d = fig_dialogue(value="hobsons house", text="i am stuck at hobsons house now")
        d.transition.domain, d.transition.slot = Domain.TAXI, Slot.DEPARTURE
        rng = random.Random(0)
        for _ in range(20):
            out = augment(d, bank, AUGMENT_DOMAIN, rng)
            assert "taxi" in out.sentence.lower()

    def test_fixed_rng_repeats_choice(self, bank):
        d = fig_dialogue()
        a = augment(d, bank, AUGMENT_DOMAIN, random.Random(42))
        b = augment(d, bank, AUGMENT_DOMAIN, random.Random(42))
        assert a.sentence == b.sentence

    def test_unk_domain_rejected(self, bank, small_corpus):
        unk = next(d for d in small_corpus if d.transition.domain == Domain.UNK)
        with pytest.raises(TemplateError):
            augment(unk, bank, AUGMENT_DOMAIN, random.Random(0))

    def test_missing_bank_key_names_key(self):
        d = fig_dialogue()
        tiny = TemplateBank({Domain.TAXI: [Template("taxi", "Need a taxi?")]}, {})
        with pytest.raises(TemplateError, match="restaurant"):
            augment(d, tiny, AUGMENT_DOMAIN, random.Random(0))

    def test_dsv_requires_slot_and_value(self, bank):
        d = fig_dialogue()
        d.transition = d.transition.__class__(domain=Domain.RESTAURANT, slot=Slot.UNK, turn_index=1)
        with pytest.raises(TemplateError, match="requires slot and value"):
            augment(d, bank, AUGMENT_DSV, random.Random(0))

    def test_source_dialogue_unchanged(self, bank):
        d = fig_dialogue()
        snapshot = dialogue_to_json(d)
        augment(d, bank, AUGMENT_DSV, random.Random(0))
        assert dialogue_to_json(d) == snapshot
