from .classifier import (
    ClassifierConfig,
    ClassifierHandle,
    batch_plan,
    config_hash,
    init_model,
    train_classifier,
)
from .model import SmallCnn

__all__ = [
    "ClassifierConfig",
    "ClassifierHandle",
    "SmallCnn",
    "batch_plan",
    "config_hash",
    "init_model",
    "train_classifier",
]
