from .crf_layer import BAN_SCORE, CrfLayer
from .data import TieBatch, pad_batch
from .model import MODE_WITH_CRF, MODE_WITHOUT_CRF, TieConfig, TieModel, TieOutput
from .train import TieTrainConfig, TieTrainResult, evaluate_tie, train_tie

__all__ = [
    "BAN_SCORE",
    "CrfLayer",
    "TieBatch",
    "pad_batch",
    "MODE_WITH_CRF",
    "MODE_WITHOUT_CRF",
    "TieConfig",
    "TieModel",
    "TieOutput",
    "TieTrainConfig",
    "TieTrainResult",
    "evaluate_tie",
    "train_tie",
]
