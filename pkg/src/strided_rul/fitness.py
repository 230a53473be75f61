"""Objective for the data-parameter search: validation RMSE of a short training run."""
from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from . import metrics
from .cmapss import TrajectorySet
from .de import SearchBounds
from .errors import ConfigError, TrainingError
from .regressor import TrainConfig, build_model, forward, preset, train
from .windowing import DataParams, build_training_windows, build_validation_features, split_engines

log = logging.getLogger(__name__)

FITNESS_TRAIN = TrainConfig(epochs=20, batch_size=512, validation_fraction=0.1)


@dataclass(frozen=True)
class FitnessResult:
    rmse: float
    rhs: float
    train_rows: int
    status: str = "ok"


class RulFitness:
    """Callable ``v -> validation RMSE`` over a normalized training set.

    The engines with the highest ids (``validation_fraction`` of them) are
    held out; each is cut at fixed random points to produce test-like rows.
    Model initialization, shuffling and the cuts use fixed seeds, so the
    score of a parameter triple never changes between calls.
    """

    def __init__(
        self,
        train_set: TrajectorySet,
        bounds: SearchBounds,
        train_config: TrainConfig = FITNESS_TRAIN,
        layers=None,
        model_seed: int = 0,
        validation_seed: int = 0,
        samples_per_engine: int = 10,
    ):
        if not train_set.normalized:
            log.warning("fitness built on un-normalized trajectories")
        self.bounds = bounds
        self.train_config = train_config
        self.layers = tuple(layers) if layers is not None else preset("arch1")
        self.model_seed = model_seed
        self.validation_seed = validation_seed
        self.samples_per_engine = samples_per_engine
        self.fit_set, self.holdout = split_engines(train_set, train_config.validation_fraction)
        if len(self.holdout) == 0:
            raise ConfigError("fitness needs a validation split (validation_fraction > 0)")

    def with_epochs(self, epochs: int) -> "RulFitness":
        other = copy.copy(self)
        other.train_config = replace(self.train_config, epochs=epochs)
        return other

    def evaluate(self, v: DataParams) -> FitnessResult:
        self.bounds.check(v)
        data = build_training_windows(self.fit_set, v)
        if len(data) == 0:
            log.warning("no training windows for %s; scoring +inf", v)
            return FitnessResult(math.inf, math.inf, 0, "no-windows")
        val = build_validation_features(
            self.holdout, v, seed=self.validation_seed,
            samples_per_engine=self.samples_per_engine, max_rul=self.bounds.r_e[1],
        )
        model = build_model(data.width, self.layers, self.model_seed)
        try:
            model, _ = train(model, data, self.train_config)
        except TrainingError as exc:
            log.warning("training diverged for %s: %s", v, exc)
            return FitnessResult(math.inf, math.inf, len(data), "diverged")
        err = forward(model, val.features) - val.labels
        if not np.all(np.isfinite(err)):
            return FitnessResult(math.inf, math.inf, len(data), "non-finite")
        return FitnessResult(metrics.rmse(err), metrics.rhs(err), len(data))

    def __call__(self, v: DataParams) -> float:
        return self.evaluate(v).rmse
