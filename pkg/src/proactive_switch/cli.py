"""Command-line entry points for every pipeline stage plus an interactive REPL."""

from __future__ import annotations

import functools
import json
import logging
import os
import random
import sys
from pathlib import Path

import click

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .checkpoint import (
    load_generator_checkpoint,
    load_tie_checkpoint,
    save_generator_checkpoint,
    save_tie_checkpoint,
)
from .corpus import ingest_with_report, save_corpus, split_of
from .encoder import EncoderConfig
from .labels import Domain, Slot, TransitionInfo
from .pipeline import DialoguePipeline
from .synth import SynthSpec, synth_generate
from .templates import AUGMENT_DOMAIN, AUGMENT_DSV, augment, default_bank, load_bank
from .vocab import build_training_vocab

log = logging.getLogger(__name__)

HOME_ENV = "PROACTIVE_SWITCH_HOME"


def _home_default(name: str) -> Path | None:
    home = os.environ.get(HOME_ENV)
    return Path(home) / name if home else None


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if p.suffix.lower() == ".toml":
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    return json.loads(p.read_text(encoding="utf-8"))


def runtime_errors(fn):
    """Map runtime failures to exit code 1 with a clean message."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except Exception as exc:  # noqa: BLE001 - CLI boundary
            raise click.ClickException(str(exc)) from exc

    return wrapper


class Settings:
    """Group-level state: global seed plus config-file defaults."""

    def __init__(self, seed: int, config: dict):
        self.seed = seed
        self.config = config

    def get(self, key: str, flag_value, default):
        if flag_value is not None:
            return flag_value
        return self.config.get(key, default)

    def resolve_seed(self, flag_value) -> int:
        return self.seed if flag_value is None else flag_value


pass_settings = click.make_pass_decorator(Settings)


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Global random seed.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="TOML/JSON config file; flags override it.")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
@click.pass_context
def main(ctx, seed, config_path, verbose):
    """Chit-chat to task-oriented transition pipeline."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = Settings(seed=seed, config=_load_config(config_path))


@main.command()
@click.option("--n", type=int, default=None, help="Number of dialogues (default from spec).")
@click.option("--seed", type=int, default=None, help="Generation seed.")
@click.option("--spec", "spec_path", type=click.Path(exists=True), default=None, help="Synthetic-corpus spec JSON.")
@click.option("--unk-fraction", type=float, default=None)
@click.option("--out", type=click.Path(), required=True)
@pass_settings
@runtime_errors
def synth(settings, n, seed, spec_path, unk_fraction, out):
    """Generate a deterministic synthetic corpus."""
    spec = SynthSpec.load(spec_path) if spec_path else SynthSpec.default()
    if unk_fraction is not None:
        spec.unk_fraction = unk_fraction
    dialogues = synth_generate(spec, seed=settings.resolve_seed(seed), n=n)
    save_corpus(dialogues, out)
    counts = {s: sum(1 for d in dialogues if d.split == s) for s in ("train", "valid", "test")}
    click.echo(json.dumps({"written": out, "n": len(dialogues), "splits": counts}))


@main.command()
@click.argument("path", type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["fusedchat_json"]), default="fusedchat_json", show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Re-serialize the validated corpus.")
@runtime_errors
def ingest(path, fmt, out):
    """Validate a corpus file and report split sizes."""
    dialogues, report = ingest_with_report(path, fmt)
    if out:
        save_corpus(dialogues, out)
    click.echo(
        json.dumps(
            {
                "accepted": report.accepted,
                "splits": report.split_sizes,
                "rejected": [{"id": i, "reason": r} for i, r in report.rejected],
            }
        )
    )


@main.command("augment")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--bank", "bank_path", type=click.Path(exists=True), default=None, help="Template bank (default: shipped).")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
@pass_settings
@runtime_errors
def augment_cmd(settings, corpus_path, bank_path, seed, out):
    """Append transition sentences: two augmented variants per eligible dialogue."""
    bank = load_bank(bank_path) if bank_path else default_bank()
    dialogues, _ = ingest_with_report(corpus_path)
    rng = random.Random(settings.resolve_seed(seed))
    augmented = []
    skipped = 0
    for d in dialogues:
        if d.transition.domain == Domain.UNK:
            skipped += 1
            continue
        for mode in (AUGMENT_DOMAIN, AUGMENT_DSV):
            if mode == AUGMENT_DSV and (d.transition.slot == Slot.UNK or not d.transition.value):
                continue
            result = augment(d, bank, mode, rng)
            result.dialogue.id = f"{d.id}#{mode}"
            augmented.append(result.dialogue)
    save_corpus(augmented, out)
    click.echo(json.dumps({"written": out, "augmented": len(augmented), "skipped_unk": skipped}))


@main.command("train-tie")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--crf/--no-crf", "use_crf", default=True, show_default=True)
@click.option("--slot-filling/--no-slot-filling", "use_slot_filling", default=True, show_default=True)
@click.option("--lr", type=float, default=None, help="Learning rate [default: 5e-5].")
@click.option("--batch", type=int, default=None, help="Batch size [default: 32].")
@click.option("--epochs", type=int, default=None, help="Max epochs [default: 30].")
@click.option("--patience", type=int, default=None, help="Early-stopping patience [default: 3].")
@click.option("--d-model", type=int, default=None)
@click.option("--layers", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
@pass_settings
@runtime_errors
def train_tie_cmd(settings, corpus_path, use_crf, use_slot_filling, lr, batch, epochs, patience, d_model, layers, seed, out):
    """Train the transition info extractor."""
    from .corpus import derive_examples
    from .tie.train import TieTrainConfig, train_tie

    dialogues, _ = ingest_with_report(corpus_path)
    train_d, valid_d = split_of(dialogues, "train"), split_of(dialogues, "valid")
    tokenizer = build_training_vocab(dialogues)
    train_ex = derive_examples(train_d, tokenizer)
    valid_ex = derive_examples(valid_d, tokenizer)
    cfg = TieTrainConfig(
        use_crf=use_crf,
        use_slot_filling=use_slot_filling,
        lr=settings.get("tie_lr", lr, 5e-5),
        batch_size=settings.get("tie_batch", batch, 32),
        max_epochs=settings.get("tie_epochs", epochs, 30),
        patience=settings.get("patience", patience, 3),
        seed=settings.resolve_seed(seed),
    )
    encoder_cfg = EncoderConfig(
        vocab_size=tokenizer.vocab_size,
        d_model=settings.get("d_model", d_model, 128),
        layers=settings.get("layers", layers, 2),
    )
    result = train_tie(train_ex, valid_ex, tokenizer, encoder_cfg, cfg)
    meta = {"best_epoch": result.best_epoch, "best_metric": result.best_metric, "history": result.history}
    save_tie_checkpoint(out, result.model, tokenizer, meta)
    click.echo(json.dumps({"written": out, "best_epoch": result.best_epoch, "best_metric": result.best_metric}))


@main.command("train-tsg")
@click.option("--stage", type=click.Choice(["base", "adapter", "full_finetune"]), required=True)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True,
              help="Raw corpus for --stage base; augmented corpus otherwise.")
@click.option("--base", "base_path", type=click.Path(exists=True), default=None, help="Base checkpoint (adapter/full stages).")
@click.option("--bank", "bank_path", type=click.Path(exists=True), default=None, help="Template bank for vocabulary (base stage).")
@click.option("--variant", type=click.Choice(["houlsby", "pfeiffer"]), default="houlsby", show_default=True)
@click.option("--bottleneck", type=int, default=16, show_default=True)
@click.option("--with-prompt/--without-prompt", "with_prompt", default=True, show_default=True)
@click.option("--lr", type=float, default=None, help="Learning rate [default: 5e-5].")
@click.option("--batch", type=int, default=None, help="Batch size [default: 20].")
@click.option("--epochs", type=int, default=None, help="Max epochs [default: 20].")
@click.option("--patience", type=int, default=None, help="Early-stopping patience [default: 3].")
@click.option("--d-model", type=int, default=None)
@click.option("--layers", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
@pass_settings
@runtime_errors
def train_tsg_cmd(
    settings, stage, corpus_path, base_path, bank_path, variant, bottleneck, with_prompt,
    lr, batch, epochs, patience, d_model, layers, seed, out,
):
    """Train the unified generator (base) or extend it for transitions."""
    from .tsg.data import transition_examples_from_corpus, unified_examples
    from .tsg.decoder import AdapterConfig, DecoderConfig
    from .tsg.train import GenTrainConfig, train_tsg, train_unified

    dialogues, _ = ingest_with_report(corpus_path)
    cfg = GenTrainConfig(
        lr=settings.get("tsg_lr", lr, 5e-5),
        batch_size=settings.get("tsg_batch", batch, 20),
        max_epochs=settings.get("tsg_epochs", epochs, 20),
        patience=settings.get("patience", patience, 3),
        seed=settings.resolve_seed(seed),
    )

    if stage == "base":
        bank = load_bank(bank_path) if bank_path else default_bank()
        tokenizer = build_training_vocab(dialogues, bank)
        train_ex = unified_examples(split_of(dialogues, "train"))
        valid_ex = unified_examples(split_of(dialogues, "valid"))
        decoder_cfg = DecoderConfig(
            vocab_size=tokenizer.vocab_size,
            d_model=settings.get("d_model", d_model, 128),
            layers=settings.get("layers", layers, 2),
        )
        result = train_unified(train_ex, valid_ex, tokenizer, decoder_cfg, cfg)
    else:
        if base_path is None:
            raise click.UsageError("--base is required for adapter/full_finetune stages")
        base_model, tokenizer, _ = load_generator_checkpoint(base_path)
        augmented = [d for d in dialogues if d.augmented_kind]
        if not augmented:
            raise click.ClickException("corpus has no augmented dialogues (run the augment command first)")
        train_ex = transition_examples_from_corpus(split_of(augmented, "train"), with_prompt=with_prompt)
        valid_ex = transition_examples_from_corpus(split_of(augmented, "valid"), with_prompt=with_prompt)
        adapter_cfg = AdapterConfig(variant=variant, bottleneck=bottleneck) if stage == "adapter" else None
        mode = "adapter" if stage == "adapter" else "full_finetune"
        result = train_tsg(base_model, train_ex, valid_ex, tokenizer, adapter_cfg, mode, cfg)
        if stage == "adapter":
            click.echo(
                json.dumps(
                    {
                        "trainable_fraction": result.trainable_fraction,
                        "base_hash_unchanged": result.base_hash_before == result.base_hash_after,
                    }
                )
            )

    meta = {
        "stage": stage,
        "with_prompt": with_prompt,
        "best_epoch": result.best_epoch,
        "best_perplexity": result.best_perplexity,
        "trainable_fraction": result.trainable_fraction,
    }
    save_generator_checkpoint(out, result.model, tokenizer, meta)
    click.echo(json.dumps({"written": out, "best_epoch": result.best_epoch, "best_perplexity": result.best_perplexity}))


@main.command("eval-tie")
@click.option("--ckpt", "ckpt_path", type=click.Path(exists=True), required=True)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--split", type=click.Choice(["train", "valid", "test"]), default="test", show_default=True)
@click.option("--out", type=click.Path(), default=None)
@runtime_errors
def eval_tie_cmd(ckpt_path, corpus_path, split, out):
    """Extraction metrics over a labelled split."""
    from .corpus import derive_examples
    from .tie.train import evaluate_tie

    model, tokenizer, _ = load_tie_checkpoint(ckpt_path)
    dialogues, _ = ingest_with_report(corpus_path)
    examples = derive_examples(split_of(dialogues, split), tokenizer, model.tag_dict, model.encoder_cfg.max_len)
    scores = evaluate_tie(model, examples, tokenizer)
    report = {"split": split, "n": len(examples), **scores, "meteor": None, "bertscore": None}
    if out:
        Path(out).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    click.echo(json.dumps(report, indent=2))


@main.command("eval-gen")
@click.option("--ckpt", "ckpt_path", type=click.Path(exists=True), required=True)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--split", type=click.Choice(["train", "valid", "test"]), default="test", show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--without-prompt", "without_prompt", is_flag=True, help="Evaluate transition turns without prompt input.")
@click.option("--out", type=click.Path(), default=None)
@pass_settings
@runtime_errors
def eval_gen_cmd(settings, ckpt_path, corpus_path, split, seed, without_prompt, out):
    """Generation metrics: diversity, BLEU, and transition-prompt accuracy."""
    from .evaluation import evaluate_generation

    model, tokenizer, _ = load_generator_checkpoint(ckpt_path)
    dialogues, _ = ingest_with_report(corpus_path)
    report = evaluate_generation(
        model,
        tokenizer,
        split_of(dialogues, split),
        seed=settings.resolve_seed(seed),
        with_prompt=not without_prompt,
    )
    report["split"] = split
    if out:
        Path(out).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    click.echo(json.dumps(report, indent=2))


@main.command("eval-combined")
@click.option("--tie", "tie_path", type=click.Path(exists=True), default=None)
@click.option("--tsg", "tsg_path", type=click.Path(exists=True), default=None)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--split", type=click.Choice(["train", "valid", "test"]), default="test", show_default=True)
@click.option("--prompt-source", type=click.Choice(["tie", "gold"]), default="tie", show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@pass_settings
@runtime_errors
def eval_combined_cmd(settings, tie_path, tsg_path, corpus_path, split, prompt_source, seed, out):
    """Combined extractor + generator evaluation at transition turns."""
    tie_path = tie_path or _home_default("tie.ckpt")
    tsg_path = tsg_path or _home_default("tsg.ckpt")
    if not tie_path or not tsg_path:
        raise click.ClickException(f"--tie/--tsg required (or set {HOME_ENV})")
    pipeline = DialoguePipeline.from_checkpoints(tie_path, tsg_path, seed=settings.resolve_seed(seed))
    dialogues, _ = ingest_with_report(corpus_path)
    report = pipeline.run_batch(split_of(dialogues, split), prompt_source=prompt_source, report_path=out)
    summary = {k: v for k, v in report.items() if k != "traces"}
    click.echo(json.dumps(summary, indent=2))


@main.command()
@click.option("--tie", "tie_path", type=click.Path(exists=True), default=None)
@click.option("--tsg", "tsg_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None)
@pass_settings
@runtime_errors
def chat(settings, tie_path, tsg_path, seed):
    """Interactive terminal session against the live pipeline."""
    tie_path = tie_path or _home_default("tie.ckpt")
    tsg_path = tsg_path or _home_default("tsg.ckpt")
    if not tie_path or not Path(tie_path).exists() or not tsg_path or not Path(tsg_path).exists():
        raise click.ClickException(f"checkpoints not found; pass --tie/--tsg or set {HOME_ENV}")
    pipeline = DialoguePipeline.from_checkpoints(tie_path, tsg_path, seed=settings.resolve_seed(seed))
    state = pipeline.new_session()
    click.echo("chat session started (empty line to quit)")
    while True:
        try:
            user_text = click.prompt("you", prompt_suffix="> ")
        except (EOFError, click.Abort):
            break
        if not user_text.strip():
            break
        result = pipeline.step(state, user_text)
        click.echo(f"system> {result.response}")
        if result.transition_sentence:
            click.secho(f"      + {result.transition_sentence}", fg="red")
            click.echo(f"      (info: {result.info.as_dict()})")
    click.echo("bye")


@main.command()
@click.option("--tie", "tie_path", type=click.Path(exists=True), default=None)
@click.option("--tsg", "tsg_path", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--cors-origin", "cors_origins", multiple=True, help="Allowed CORS origins (default: *).")
@click.option("--session-ttl", type=float, default=1800.0, show_default=True)
@click.option("--seed", type=int, default=None)
@pass_settings
@runtime_errors
def serve(settings, tie_path, tsg_path, host, port, cors_origins, session_ttl, seed):
    """Run the JSON-over-HTTP chat service."""
    import uvicorn

    from .service import create_app

    tie_path = tie_path or _home_default("tie.ckpt")
    tsg_path = tsg_path or _home_default("tsg.ckpt")
    pipeline = None
    if tie_path and Path(tie_path).exists() and tsg_path and Path(tsg_path).exists():
        pipeline = DialoguePipeline.from_checkpoints(tie_path, tsg_path, seed=settings.resolve_seed(seed))
    else:
        log.warning("starting without checkpoints; endpoints will answer 503")
    app = create_app(pipeline, cors_origins=list(cors_origins) or None, session_ttl=session_ttl)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
