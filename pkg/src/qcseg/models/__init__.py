from .config import QCArchConfig, SegArchConfig, TrainConfig
from .train import (
    TrainedModel,
    qc_score,
    qc_score_many,
    segment,
    train_qc_classifier,
    train_segmenter,
)
from .checkpoint import load_model, save_model

__all__ = [
    "SegArchConfig",
    "QCArchConfig",
    "TrainConfig",
    "TrainedModel",
    "train_segmenter",
    "train_qc_classifier",
    "segment",
    "qc_score",
    "qc_score_many",
    "save_model",
    "load_model",
]
