"""Proactive chit-chat to task-oriented dialogue transitions.

Components: a transition info extractor (joint domain/slot classification plus
CRF slot filling), transition-sentence templates and dialogue augmentation, a
prompt-conditioned generator extended with bottleneck adapters over a frozen
base decoder, evaluation metrics, and a batch/live pipeline with CLI and HTTP
service front ends.
"""

__version__ = "0.1.0"
