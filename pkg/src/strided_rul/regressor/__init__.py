from .gradcheck import gradient_check
from .model import (
    DEFAULT_ARCHITECTURE,
    LINEAR,
    PRESETS,
    RELU,
    LayerSpec,
    MlpModel,
    build_model,
    forward,
    gradients,
    loss,
    parameter_count,
    penalty,
    preset,
    with_regularization,
)
from .persistence import dumps, load_model, loads, save_model
from .training import History, TrainConfig, train

__all__ = [
    "DEFAULT_ARCHITECTURE", "LINEAR", "PRESETS", "RELU", "History", "LayerSpec", "MlpModel",
    "TrainConfig", "build_model", "dumps", "forward", "gradient_check", "gradients", "load_model",
    "loads", "loss", "parameter_count", "penalty", "preset", "save_model", "train",
    "with_regularization",
]
