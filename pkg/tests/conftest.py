import random

import pytest
import torch

from proactive_switch.corpus import split_of
from proactive_switch.encoder import EncoderConfig
from proactive_switch.labels import Domain, Slot
from proactive_switch.synth import SynthSpec, synth_generate
from proactive_switch.templates import AUGMENT_DOMAIN, AUGMENT_DSV, augment, default_bank
from proactive_switch.vocab import build_training_vocab


@pytest.fixture(scope="session")
def synth_spec():
    return SynthSpec.default()


@pytest.fixture(scope="session")
def small_corpus(synth_spec):
    return synth_generate(synth_spec, seed=7, n=160)


@pytest.fixture(scope="session")
def bank():
    return default_bank()


@pytest.fixture(scope="session")
def tokenizer(small_corpus, bank):
    return build_training_vocab(small_corpus, bank)


@pytest.fixture(scope="session")
def tiny_encoder_cfg(tokenizer):
    return EncoderConfig(vocab_size=tokenizer.vocab_size, d_model=48, layers=2, heads=2, max_len=128)


def augment_both(dialogues, bank, seed=3):
    rng = random.Random(seed)
    out = []
    for d in dialogues:
        if d.transition.domain == Domain.UNK:
            continue
        out.append(augment(d, bank, AUGMENT_DOMAIN, rng))
        if d.transition.slot != Slot.UNK and d.transition.value:
            out.append(augment(d, bank, AUGMENT_DSV, rng))
    return out


@pytest.fixture(scope="session")
def mini_trained(small_corpus, bank, tokenizer, tiny_encoder_cfg):
    """A small but genuinely trained TIE + generator pair for integration tests."""
    from proactive_switch.corpus import derive_examples
    from proactive_switch.tie.train import TieTrainConfig, train_tie
    from proactive_switch.tsg.data import transition_examples, unified_examples
    from proactive_switch.tsg.decoder import AdapterConfig, DecoderConfig
    from proactive_switch.tsg.train import GenTrainConfig, train_tsg, train_unified

    torch.manual_seed(0)
    train_d, valid_d = split_of(small_corpus, "train"), split_of(small_corpus, "valid")
    tie = train_tie(
        derive_examples(train_d, tokenizer),
        derive_examples(valid_d, tokenizer),
        tokenizer,
        tiny_encoder_cfg,
        TieTrainConfig(use_crf=True, lr=3e-3, batch_size=16, max_epochs=22, patience=22, seed=0),
    )
    dcfg = DecoderConfig(vocab_size=tokenizer.vocab_size, d_model=48, layers=2, heads=2, max_len=160)
    base = train_unified(
        unified_examples(train_d),
        unified_examples(valid_d),
        tokenizer,
        dcfg,
        GenTrainConfig(lr=2e-3, batch_size=20, max_epochs=8, patience=8, seed=0),
    )
    adapter = train_tsg(
        base.model,
        transition_examples(augment_both(train_d, bank), with_prompt=True),
        transition_examples(augment_both(valid_d, bank), with_prompt=True),
        tokenizer,
        AdapterConfig(variant="houlsby", bottleneck=32),
        "adapter",
        GenTrainConfig(lr=3e-3, batch_size=20, max_epochs=12, patience=12, seed=0),
    )
    return {"tie": tie, "base": base, "adapter": adapter, "tokenizer": tokenizer}
