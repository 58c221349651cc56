"""bevharness: seq2seq training/prediction over exported BEV scene datasets."""

from .evaluate import predict
from .losses import ShapeMismatch, sequence_cross_entropy
from .model import PRESETS, build_model
from .train import TrainConfig, train
from .vocab import build_tokenizer, tokenizer_for_dataset

__version__ = "0.1.0"

__all__ = [
    "PRESETS",
    "ShapeMismatch",
    "TrainConfig",
    "build_model",
    "build_tokenizer",
    "predict",
    "sequence_cross_entropy",
    "tokenizer_for_dataset",
    "train",
    "__version__",
]
