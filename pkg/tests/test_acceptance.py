"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The end-to-end tests train the full system (extractor with and without CRF,
unified base, adapter extension, no-prompt baseline) on a 500-dialogue
synthetic corpus with fixed seeds, then check the designed thresholds. The
whole end-to-end block must finish within its wall-clock budget on CPU.
"""

import itertools
import random
import time

import numpy as np
import pytest
import torch

from proactive_switch import metrics
from proactive_switch.checkpoint import bank_hash
from proactive_switch.corpus import derive_examples, split_of
from proactive_switch.crf import backend
from proactive_switch.encoder import EncoderConfig
from proactive_switch.labels import Domain, Slot, TagDictionary, TransitionInfo
from proactive_switch.pipeline import DialoguePipeline
from proactive_switch.synth import SynthSpec, synth_generate
from proactive_switch.templates import AUGMENT_DOMAIN, AUGMENT_DSV, augment, default_bank
from proactive_switch.tie.crf_layer import CrfLayer
from proactive_switch.tie.train import TieTrainConfig, evaluate_tie, train_tie
from proactive_switch.tokenizer import END_TOKEN
from proactive_switch.tsg.data import transition_examples, unified_examples
from proactive_switch.tsg.decoder import AdapterConfig, DecoderConfig, TransitionDecoder
from proactive_switch.tsg.generate import generate_ids
from proactive_switch.tsg.prompts import KIND_DOMAIN, KIND_DSV, TransitionPrompt, build_prompt
from proactive_switch.tsg.sampling import SamplerConfig
from proactive_switch.tsg.train import GenTrainConfig, train_tsg, train_unified
from proactive_switch.vocab import build_training_vocab

from tests.test_crf import enum_all_scores, enum_path_score
from tests.test_gradients import check_coordinates
from tests.test_metrics import oracle_bleu, oracle_sf_f1, oracle_spans, random_records

E2E_BUDGET_SECONDS = 15 * 60


def report(name: str, ok: bool, detail: str = "") -> None:
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# Criterion: CRF correctness (exact Viterbi, partition within 1e-6, < 5 s)
# ---------------------------------------------------------------------------


def test_crf_correctness():
    rng = np.random.default_rng(42)
    started = time.perf_counter()
    worst_rel = 0.0
    for _ in range(200):
        L = int(rng.integers(2, 6))
        n = int(rng.integers(1, 7))
        em = rng.normal(size=(1, n, L)) * 2
        tr = rng.normal(size=(L, L))
        st, en = rng.normal(size=L), rng.normal(size=L)
        scores = enum_all_scores(em[0], tr, st, en, n, L)
        logz, _, _ = backend.crf_forward_backward(em, np.array([n]), tr, st, en)
        expected = np.logaddexp.reduce(scores)
        worst_rel = max(worst_rel, abs(logz[0] - expected) / max(abs(expected), 1e-12))
        paths, vscores = backend.crf_viterbi(em, np.array([n]), tr, st, en)
        assert vscores[0] == max(scores), "viterbi score must equal exhaustive maximum exactly"
    elapsed = time.perf_counter() - started
    report(
        "crf_correctness",
        worst_rel <= 1e-6 and elapsed < 5.0,
        f"(200 instances, max rel err {worst_rel:.2e}, {elapsed:.2f}s)",
    )


# ---------------------------------------------------------------------------
# Criterion: gradient checks (central differences, 100 coordinates, rel 1e-4)
# ---------------------------------------------------------------------------


def test_gradient_checks(tokenizer):
    rng = np.random.default_rng(7)
    checked = 0

    torch.manual_seed(0)
    layer = CrfLayer(TagDictionary()).double()
    em = torch.randn(3, 7, 22, dtype=torch.float64, requires_grad=True)
    gold = torch.tensor([[1, 3, 4, 5, 5, 3, 2], [1, 3, 3, 3, 2, 0, 0], [1, 2, 0, 0, 0, 0, 0]])
    mask = torch.tensor([[1] * 7, [1] * 5 + [0] * 2, [1] * 2 + [0] * 5], dtype=torch.bool)

    def crf_loss():
        return layer.nll(em, gold, mask).sum()

    for param, n in [(em, 20), (layer.transitions, 20), (layer.start_scores, 5), (layer.end_scores, 5)]:
        layer.zero_grad()
        if em.grad is not None:
            em.grad = None
        crf_loss().backward()
        grad = param.grad
        checked += check_coordinates(param, grad, crf_loss, rng, n_coords=n)

    from proactive_switch.tie.model import TieConfig, TieModel

    torch.manual_seed(1)
    cfg = EncoderConfig(vocab_size=tokenizer.vocab_size, d_model=32, layers=1, heads=2, dropout=0.0, max_len=64)
    model = TieModel(cfg, TieConfig(use_crf=True, use_slot_filling=True)).double()
    model.eval()
    tokens = torch.randint(0, tokenizer.vocab_size, (3, 8))
    hmask = torch.ones(3, 8, dtype=torch.bool)
    hmask[2, 6:] = False
    tags = torch.ones(3, 8, dtype=torch.long)
    tags[~hmask] = 0
    domain, slot = torch.tensor([0, 1, 2]), torch.tensor([1, 2, 3])

    def head_loss():
        total, _ = model.loss(tokens, hmask, tags, domain, slot)
        return total

    for param, n in [
        (model.domain_head.weight, 15),
        (model.slot_head.weight, 15),
        (model.emission_head.weight, 15),
        (model.domain_head.bias, 5),
    ]:
        model.zero_grad()
        head_loss().backward()
        checked += check_coordinates(param, param.grad, head_loss, rng, n_coords=n)

    report("gradient_checks", checked >= 100, f"({checked} coordinates, eps=1e-4, rel tol 1e-4)")


# ---------------------------------------------------------------------------
# Criterion: metric fixtures agree with brute-force oracles (1000 fixtures)
# ---------------------------------------------------------------------------


def test_metric_fixtures():
    rng = random.Random(99)
    records = random_records(rng, 1000)
    ok = True
    detail = []

    impl_f1 = metrics.sf_f1(records)
    oracle_f1 = oracle_sf_f1(records)
    ok &= abs(impl_f1 - oracle_f1) <= 1e-6
    detail.append(f"sf_f1 {impl_f1:.6f}")

    oracle_sen = sum(1 for r in records if r.gold_tags == r.pred_tags) / len(records)
    ok &= abs(metrics.sen_sf_acc(records) - oracle_sen) <= 1e-6
    oracle_sem = sum(
        1 for r in records if r.gold_tags == r.pred_tags and r.gold_domain == r.pred_domain and r.gold_slot == r.pred_slot
    ) / len(records)
    ok &= abs(metrics.semantic_acc(records) - oracle_sem) <= 1e-6

    words = ["the", "cat", "sat", "mat", "dog", "ran"]
    cands, refs = [], []
    for _ in range(1000):
        ref = rng.choices(words, k=rng.randint(3, 9))
        cand = [w if rng.random() < 0.7 else rng.choice(words) for w in ref]
        cands.append(" ".join(cand))
        refs.append(" ".join(ref))
    ok &= abs(metrics.bleu(cands, refs) - oracle_bleu(cands, refs)) <= 1e-6
    detail.append(f"bleu {metrics.bleu(cands, refs):.6f}")

    for n in (1, 2):
        grams = []
        for c in cands:
            toks = c.split()
            grams += [tuple(toks[i : i + n]) for i in range(len(toks) - n + 1)]
        ok &= abs(metrics.distinct_n(cands, n) - len(set(grams)) / len(grams)) <= 1e-6

    classes = list("abcd")
    golds = [rng.choice(classes) for _ in range(1000)]
    preds = [rng.choice(classes) for _ in range(1000)]
    ours = metrics.classification_scores(golds, preds, classes)
    support = {c: golds.count(c) for c in classes}
    weighted = 0.0
    for c in classes:
        tp = sum(1 for g, p in zip(golds, preds) if g == p == c)
        pp = preds.count(c)
        precision = tp / pp if pp else 0.0
        recall = tp / support[c] if support[c] else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        weighted += support[c] * f1
    ok &= abs(ours["weighted_f1"] - weighted / len(golds)) <= 1e-6

    report("metric_fixtures", ok, f"(1000 randomized fixtures; {', '.join(detail)})")


# ---------------------------------------------------------------------------
# Criterion: prompt format byte equality
# ---------------------------------------------------------------------------


def test_prompt_format():
    domain_prompt = build_prompt(TransitionPrompt(KIND_DOMAIN, TransitionInfo(domain=Domain.TRAIN)))
    dsv_prompt = build_prompt(
        TransitionPrompt(KIND_DSV, TransitionInfo(domain=Domain.TRAIN, slot=Slot.DESTINATION, value="Norwich"))
    )
    ok = domain_prompt == "[TRANSITION] ( domain = train )" and dsv_prompt == (
        "[TRANSITION] ( domain = train, slot = destination, value = Norwich )"
    )
    report("prompt_format", ok, f"({domain_prompt!r}, {dsv_prompt!r})")


# ---------------------------------------------------------------------------
# End-to-end synthetic replication (trained once, shared by the criteria below)
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def e2e():
    started = time.perf_counter()
    spec = SynthSpec.default()
    pretrain = synth_generate(spec, seed=101, n=1500)  # stand-in for decoder pretraining data
    corpus = synth_generate(spec, seed=11, n=500)
    bank = default_bank()
    tok = build_training_vocab(pretrain + corpus, bank)
    train_d, valid_d, test_d = split_of(corpus, "train"), split_of(corpus, "valid"), split_of(corpus, "test")

    tr_ex = derive_examples(train_d, tok)
    va_ex = derive_examples(valid_d, tok)
    te_ex = derive_examples(test_d, tok)
    enc_cfg = EncoderConfig(vocab_size=tok.vocab_size)
    tie_crf = train_tie(
        tr_ex, va_ex, tok, enc_cfg, TieTrainConfig(use_crf=True, lr=1e-3, batch_size=32, max_epochs=24, patience=8, seed=0)
    )
    tie_nocrf = train_tie(
        tr_ex, va_ex, tok, enc_cfg, TieTrainConfig(use_crf=False, lr=1e-3, batch_size=32, max_epochs=24, patience=8, seed=0)
    )

    dcfg = DecoderConfig(vocab_size=tok.vocab_size)
    base = train_unified(
        unified_examples(split_of(pretrain, "train")),
        unified_examples(split_of(pretrain, "valid")),
        tok,
        dcfg,
        GenTrainConfig(lr=1e-3, batch_size=20, max_epochs=6, patience=6, seed=0, cosine_lr_decay=True),
    )

    rng = random.Random(5)

    def augment_all(dialogues):
        out = []
        for d in dialogues:
            if d.transition.domain == Domain.UNK:
                continue
            out.append(augment(d, bank, AUGMENT_DOMAIN, rng))
            if d.transition.slot != Slot.UNK and d.transition.value:
                out.append(augment(d, bank, AUGMENT_DSV, rng))
        return out

    aug_train = augment_all(split_of(pretrain, "train") + train_d)
    aug_valid = augment_all(valid_d)
    adapter_cfg = AdapterConfig(variant="houlsby", bottleneck=128)
    adapter = train_tsg(
        base.model,
        transition_examples(aug_train, with_prompt=True),
        transition_examples(aug_valid, with_prompt=True),
        tok,
        adapter_cfg,
        "adapter",
        GenTrainConfig(lr=3e-3, batch_size=20, max_epochs=38, patience=38, seed=0, cosine_lr_decay=True),
    )
    noprompt = train_tsg(
        base.model,
        transition_examples(aug_train, with_prompt=False),
        transition_examples(aug_valid, with_prompt=False),
        tok,
        adapter_cfg,
        "adapter",
        GenTrainConfig(lr=3e-3, batch_size=20, max_epochs=8, patience=8, seed=0),
    )

    crf_scores = evaluate_tie(tie_crf.model, te_ex, tok)
    nocrf_scores = evaluate_tie(tie_nocrf.model, te_ex, tok)

    from proactive_switch.evaluation import evaluate_generation

    gen_prompted = evaluate_generation(adapter.model, tok, test_d, seed=3, with_prompt=True)
    gen_noprompt = evaluate_generation(noprompt.model, tok, test_d, seed=3, with_prompt=False)

    pipe = DialoguePipeline(tie_crf.model, tok, adapter.model, tok, seed=9)
    combined_tie = pipe.run_batch(test_d, prompt_source="tie")
    combined_gold = pipe.run_batch(test_d, prompt_source="gold")

    return {
        "elapsed": time.perf_counter() - started,
        "tokenizer": tok,
        "base": base,
        "adapter": adapter,
        "adapter_cfg": adapter_cfg,
        "crf_scores": crf_scores,
        "nocrf_scores": nocrf_scores,
        "gen_prompted": gen_prompted,
        "gen_noprompt": gen_noprompt,
        "combined_tie": combined_tie,
        "combined_gold": combined_gold,
    }


def test_e2e_tie_thresholds(e2e):
    crf = e2e["crf_scores"]
    nocrf = e2e["nocrf_scores"]
    ok = crf["domain_accuracy"] >= 0.95 and crf["semantic_acc"] >= 0.85 and crf["semantic_acc"] >= nocrf["semantic_acc"]
    report(
        "e2e_tie",
        ok,
        f"(domain {crf['domain_accuracy']:.3f}>=0.95, semantic {crf['semantic_acc']:.3f}>=0.85, "
        f"crf {crf['semantic_acc']:.3f} >= no-crf {nocrf['semantic_acc']:.3f})",
    )


def test_e2e_combined_pipeline(e2e):
    gen = e2e["combined_tie"]["generation"]
    transition_acc = min(gen["domain_ts"]["transition_accuracy"], gen["dsv_ts"]["transition_accuracy"])
    d_prompted = e2e["gen_prompted"]["domain_ts"]["d_accuracy"]
    d_noprompt = e2e["gen_noprompt"]["domain_ts"]["d_accuracy"]
    dv_gold = e2e["combined_gold"]["generation"]["dsv_ts"]["dv_accuracy"]
    dv_tie = e2e["combined_tie"]["generation"]["dsv_ts"]["dv_accuracy"]
    ok = (
        transition_acc >= 0.95
        and d_prompted >= 0.90
        and d_noprompt <= d_prompted - 0.05
        and dv_gold >= dv_tie
    )
    report(
        "e2e_combined",
        ok,
        f"(transition {transition_acc:.3f}>=0.95, d {d_prompted:.3f}>=0.90 vs no-prompt {d_noprompt:.3f}, "
        f"gold dv {dv_gold:.3f} >= tie dv {dv_tie:.3f})",
    )


def test_e2e_prompt_fidelity(e2e):
    d_acc = e2e["gen_prompted"]["domain_ts"]["d_accuracy"]
    dv_acc = e2e["gen_prompted"]["dsv_ts"]["dv_accuracy"]
    ok = d_acc >= 0.90 and dv_acc >= 0.90
    report("e2e_prompt_fidelity", ok, f"(domain word {d_acc:.3f}, value {dv_acc:.3f}, both >= 0.90 held-out)")


def test_adapter_mechanism(e2e):
    adapter = e2e["adapter"]
    tok = e2e["tokenizer"]
    hash_ok = adapter.base_hash_before == adapter.base_hash_after
    assert adapter.base_hash_before is not None

    base_model = e2e["base"].model
    ext_model = adapter.model
    bypass_ok = True
    prompt_ids = tok.encode("[USER] the weather has been gorgeous lately [SYSTEM]")
    for seed in range(3):
        g1 = torch.Generator().manual_seed(seed)
        g2 = torch.Generator().manual_seed(seed)
        cfg = SamplerConfig(top_k=5, top_p=0.9)
        a = generate_ids(base_model, prompt_ids, cfg, end_id=tok.end_id, max_new_tokens=24, generator=g1)
        b = generate_ids(ext_model, prompt_ids, cfg, end_id=tok.end_id, use_adapters=False, max_new_tokens=24, generator=g2)
        bypass_ok &= a == b

    houlsby = TransitionDecoder(DecoderConfig(vocab_size=tok.vocab_size))
    houlsby.add_adapters(AdapterConfig(variant="houlsby", bottleneck=128))
    pfeiffer = TransitionDecoder(DecoderConfig(vocab_size=tok.vocab_size))
    pfeiffer.add_adapters(AdapterConfig(variant="pfeiffer", bottleneck=128))
    ratio_ok = houlsby.adapter_param_count() == 2 * pfeiffer.adapter_param_count()

    report(
        "adapter_mechanism",
        hash_ok and bypass_ok and ratio_ok,
        f"(base hash unchanged: {hash_ok}; bypass bit-identical: {bypass_ok}; "
        f"houlsby {houlsby.adapter_param_count()} = 2 x pfeiffer {pfeiffer.adapter_param_count()}: {ratio_ok})",
    )


def test_e2e_budget(e2e):
    report("e2e_budget", e2e["elapsed"] < E2E_BUDGET_SECONDS, f"({e2e['elapsed']:.0f}s < {E2E_BUDGET_SECONDS}s)")
