from .data import GenExample, transition_examples, unified_examples
from .decoder import AdapterConfig, DecoderConfig, TransitionDecoder, VARIANT_HOULSBY, VARIANT_PFEIFFER
from .generate import generate_ids, generate_text, split_transition_response
from .prompts import KIND_DOMAIN, KIND_DSV, TransitionPrompt, build_prompt, richest_prompt
from .sampling import DECODE_PRESETS, SamplerConfig, filter_probs, sample_token
from .train import (
    GenTrainConfig,
    GenTrainResult,
    MODE_ADAPTER,
    MODE_FULL_FINETUNE,
    train_tsg,
    train_unified,
)

__all__ = [
    "GenExample",
    "transition_examples",
    "unified_examples",
    "AdapterConfig",
    "DecoderConfig",
    "TransitionDecoder",
    "VARIANT_HOULSBY",
    "VARIANT_PFEIFFER",
    "generate_ids",
    "generate_text",
    "split_transition_response",
    "KIND_DOMAIN",
    "KIND_DSV",
    "TransitionPrompt",
    "build_prompt",
    "richest_prompt",
    "DECODE_PRESETS",
    "SamplerConfig",
    "filter_probs",
    "sample_token",
    "GenTrainConfig",
    "GenTrainResult",
    "MODE_ADAPTER",
    "MODE_FULL_FINETUNE",
    "train_tsg",
    "train_unified",
]
