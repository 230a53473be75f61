"""Mini-batch training loop with Adam or plain SGD."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DomainError, TrainingError
from .model import MlpModel, forward, gradients

ADAM = "adam"
SGD = "sgd"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 512
    learning_rate: float = 1e-3
    optimizer: str = ADAM
    shuffle_seed: int = 0
    validation_fraction: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ConfigError(f"epochs must be a positive integer, got {self.epochs!r}")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ConfigError(f"batch_size must be a positive integer, got {self.batch_size!r}")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.optimizer not in (ADAM, SGD):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must lie in [0, 1)")


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.lr, self.beta1, self.beta2, self.epsilon = lr, beta1, beta2, epsilon
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)


class Sgd:
    def __init__(self, params, lr=1e-3):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


def make_optimizer(params, config: TrainConfig):
    if config.optimizer == ADAM:
        return Adam(params, config.learning_rate, config.beta1, config.beta2, config.epsilon)
    return Sgd(params, config.learning_rate)


@dataclass
class History:
    train_loss: list[float] = field(default_factory=list)
    val_rmse: list[float] = field(default_factory=list)

    @property
    def epochs(self) -> int:
        return len(self.train_loss)


def _xy(data):
    if hasattr(data, "features"):
        return data.features, data.labels
    return data


def train(model: MlpModel, dataset, config: TrainConfig, validation=None):
    """Train a copy of ``model``; returns ``(trained_model, history)``.

    ``dataset`` and ``validation`` are windowed datasets or ``(X, y)`` pairs.
    Rows are reshuffled every epoch from a generator seeded with
    ``config.shuffle_seed``, so equal seeds give bit-identical weights.
    """
    X, y = _xy(dataset)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(y) == 0:
        raise DomainError("cannot train on an empty dataset")
    if validation is not None:
        Xv, yv = _xy(validation)
        yv = np.asarray(yv, dtype=np.float64)

    model = model.copy()
    params = model.parameters()
    opt = make_optimizer(params, config)
    rng = np.random.default_rng(config.shuffle_seed)
    history = History()
    m, bs = len(y), config.batch_size

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(m)
        total = 0.0
        for start in range(0, m, bs):
            idx = order[start:start + bs]
            # overflow is caught by the finiteness check below
            with np.errstate(over="ignore", invalid="ignore"):
                value, grads = gradients(model, X[idx], y[idx])
            if not math.isfinite(value):
                raise TrainingError("loss became non-finite", epoch)
            opt.step(params, grads)
            total += value * len(idx)
        history.train_loss.append(total / m)
        if validation is not None and len(yv):
            r = forward(model, Xv) - yv
            score = math.sqrt(float(np.mean(r * r)))
            if not math.isfinite(score):
                raise TrainingError("validation predictions became non-finite", epoch)
            history.val_rmse.append(score)
    return model, history
