"""Versioned checkpoint containers with named parameter banks.

A checkpoint is a torch-saved dict:

    {"format_version", "kind", "config", "vocab", "vocab_sha256",
     "banks": {name: state_dict}, "meta"}

Generator checkpoints keep the frozen base and each adapter bank separate, so
one base can coexist with several adapter extensions.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import TYPE_CHECKING

import torch

if TYPE_CHECKING:
    from .tie.model import TieModel
    from .tokenizer import Tokenizer
    from .tsg.decoder import TransitionDecoder

FORMAT_VERSION = 1

KIND_TIE = "tie"
KIND_GENERATOR = "generator"


class CheckpointError(ValueError):
    pass


def bank_hash(state: dict[str, torch.Tensor]) -> str:
    """Order-independent sha256 over parameter names, dtypes, shapes, bytes."""
    digest = hashlib.sha256()
    for name in sorted(state):
        tensor = state[name].detach().cpu().contiguous()
        digest.update(name.encode("utf-8"))
        digest.update(str(tensor.dtype).encode("utf-8"))
        digest.update(str(tuple(tensor.shape)).encode("utf-8"))
        digest.update(tensor.numpy().tobytes())
    return digest.hexdigest()


def _save(path: str | Path, payload: dict) -> None:
    payload = dict(payload)
    payload["format_version"] = FORMAT_VERSION
    torch.save(payload, path)


def _load(path: str | Path, expected_kind: str) -> dict:
    try:
        payload = torch.load(path, weights_only=True)
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint not found: {path}") from None
    if not isinstance(payload, dict) or payload.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{path} is not a recognized checkpoint")
    if payload.get("kind") != expected_kind:
        raise CheckpointError(f"{path} holds a {payload.get('kind')!r} checkpoint, expected {expected_kind!r}")
    return payload


def save_tie_checkpoint(path: str | Path, model: "TieModel", tokenizer: "Tokenizer", meta: dict | None = None) -> None:
    _save(
        path,
        {
            "kind": KIND_TIE,
            "config": {"encoder": model.encoder_cfg.as_dict(), "tie": model.tie_cfg.as_dict()},
            "vocab": tokenizer.vocab,
            "vocab_sha256": tokenizer.sha256(),
            "banks": {"model": model.state_dict()},
            "meta": meta or {},
        },
    )


def load_tie_checkpoint(path: str | Path) -> tuple["TieModel", "Tokenizer", dict]:
    from .encoder import EncoderConfig
    from .tie.model import TieConfig, TieModel
    from .tokenizer import Tokenizer

    payload = _load(path, KIND_TIE)
    tokenizer = Tokenizer(payload["vocab"])
    model = TieModel(EncoderConfig(**payload["config"]["encoder"]), TieConfig(**payload["config"]["tie"]))
    model.load_state_dict(payload["banks"]["model"])
    model.eval()
    return model, tokenizer, payload.get("meta", {})


def adapter_bank_name(variant: str, bottleneck: int) -> str:
    return f"adapter:{variant}:{bottleneck}"


def save_generator_checkpoint(
    path: str | Path,
    model: "TransitionDecoder",
    tokenizer: "Tokenizer",
    meta: dict | None = None,
) -> None:
    banks = {"base": model.base_state_dict()}
    adapter_cfg = model.adapter_cfg
    if adapter_cfg is not None:
        banks[adapter_bank_name(adapter_cfg.variant, adapter_cfg.bottleneck)] = model.extension_state_dict()
    _save(
        path,
        {
            "kind": KIND_GENERATOR,
            "config": {
                "decoder": model.cfg.as_dict(),
                "adapter": adapter_cfg.as_dict() if adapter_cfg is not None else None,
                "prompt_token_ids": list(model.prompt_token_ids),
            },
            "vocab": tokenizer.vocab,
            "vocab_sha256": tokenizer.sha256(),
            "banks": banks,
            "meta": meta or {},
        },
    )


def load_generator_checkpoint(path: str | Path) -> tuple["TransitionDecoder", "Tokenizer", dict]:
    from .tokenizer import Tokenizer
    from .tsg.decoder import AdapterConfig, DecoderConfig, TransitionDecoder

    payload = _load(path, KIND_GENERATOR)
    tokenizer = Tokenizer(payload["vocab"])
    model = TransitionDecoder(DecoderConfig(**payload["config"]["decoder"]))
    adapter_raw = payload["config"].get("adapter")
    state = dict(payload["banks"]["base"])
    if adapter_raw is not None:
        adapter_cfg = AdapterConfig(**adapter_raw)
        model.add_adapters(adapter_cfg, prompt_token_ids=payload["config"].get("prompt_token_ids") or None)
        state.update(payload["banks"][adapter_bank_name(adapter_cfg.variant, adapter_cfg.bottleneck)])
    model.load_state_dict(state)
    model.eval()
    return model, tokenizer, payload.get("meta", {})


def checkpoint_hashes(path: str | Path) -> dict[str, str]:
    """Bank name -> hash, for health reporting."""
    payload = torch.load(path, weights_only=True)
    if not isinstance(payload, dict) or "banks" not in payload:
        raise CheckpointError(f"{path} is not a recognized checkpoint")
    return {name: bank_hash(state) for name, state in payload["banks"].items()}
