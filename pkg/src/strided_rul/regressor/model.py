"""Fully connected regression network in plain numpy (float64 throughout)."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import DomainError, ShapeError, ValidationError

RELU = "relu"
LINEAR = "linear"
ACTIVATIONS = (RELU, LINEAR)


@dataclass(frozen=True)
class LayerSpec:
    width: int
    activation: str = RELU
    l1: float = 0.0
    l2: float = 0.0

    def __post_init__(self):
        if int(self.width) != self.width or self.width < 1:
            raise ValidationError(f"layer width must be a positive integer, got {self.width!r}")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if self.l1 < 0 or self.l2 < 0:
            raise ValidationError("regularization coefficients must be non-negative")


def _preset(*hidden: int, l1: float = 0.1, l2: float = 0.2) -> tuple[LayerSpec, ...]:
    return tuple(LayerSpec(w, RELU, l1, l2) for w in hidden) + (LayerSpec(1, LINEAR, l1, l2),)


# Candidate architectures; "arch1" is the one used everywhere else.
PRESETS: dict[str, tuple[LayerSpec, ...]] = {
    "arch1": _preset(20, 20),
    "arch2": _preset(50, 20),
    "arch3": _preset(100, 50),
    "arch4": _preset(250, 50),
    "arch5": _preset(20),
    "arch6": _preset(10),
}
DEFAULT_ARCHITECTURE = "arch1"


def preset(name: str) -> tuple[LayerSpec, ...]:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown architecture {name!r}; choose from {sorted(PRESETS)}") from None


def with_regularization(layers, l1: float | None = None, l2: float | None = None):
    """Copy of ``layers`` with the L1 and/or L2 coefficients replaced."""
    out = []
    for spec in layers:
        if l1 is not None:
            spec = replace(spec, l1=l1)
        if l2 is not None:
            spec = replace(spec, l2=l2)
        out.append(spec)
    return tuple(out)


def parameter_count(input_width: int, layers) -> int:
    total, fan_in = 0, input_width
    for spec in layers:
        total += fan_in * spec.width + spec.width
        fan_in = spec.width
    return total


class MlpModel:
    """Layer specs plus weights ``W[k]`` of shape (fan_in, width) and biases ``b[k]``."""

    def __init__(self, input_width, layers, weights, biases, rng_seed=0):
        self.input_width = int(input_width)
        self.layers = tuple(layers)
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.rng_seed = rng_seed
        if not self.layers or self.layers[-1].width != 1:
            raise ValidationError("the output layer of a regressor must have width 1")
        fan_in = self.input_width
        for k, spec in enumerate(self.layers):
            if self.weights[k].shape != (fan_in, spec.width) or self.biases[k].shape != (spec.width,):
                raise ShapeError(
                    f"layer {k}: expected W {(fan_in, spec.width)} and b {(spec.width,)}, "
                    f"got {self.weights[k].shape} and {self.biases[k].shape}"
                )
            fan_in = spec.width

    @property
    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def parameters(self) -> list[np.ndarray]:
        """Parameter arrays in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "MlpModel":
        return MlpModel(
            self.input_width, self.layers,
            [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.rng_seed,
        )

    def predict(self, features) -> np.ndarray:
        return forward(self, features)

    def __repr__(self) -> str:
        widths = "-".join(str(s.width) for s in self.layers)
        return f"MlpModel({self.input_width}-{widths}, params={self.parameter_count})"


def build_model(input_width: int, layers, rng_seed: int = 0) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    layers = tuple(layers)
    if not layers:
        raise ValidationError("a model needs at least one layer")
    if layers[-1].width != 1 or layers[-1].activation != LINEAR:
        raise ValidationError("the output layer of a regressor must be 1 linear unit")
    if int(input_width) != input_width or input_width < 1:
        raise ValidationError(f"input width must be a positive integer, got {input_width!r}")
    rng = np.random.default_rng(rng_seed)
    weights, biases, fan_in = [], [], int(input_width)
    for spec in layers:
        limit = np.sqrt(6.0 / (fan_in + spec.width))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, spec.width)))
        biases.append(np.zeros(spec.width))
        fan_in = spec.width
    return MlpModel(input_width, layers, weights, biases, rng_seed)


def _check_input(model: MlpModel, features) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != model.input_width:
        raise ShapeError(f"model expects {model.input_width} features, got shape {X.shape}")
    return X


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    return np.maximum(z, 0.0) if activation == RELU else z


def _forward_cached(model: MlpModel, X: np.ndarray):
    acts = [X]
    pre = []
    a = X
    for spec, W, b in zip(model.layers, model.weights, model.biases):
        z = a @ W + b
        a = _activate(z, spec.activation)
        pre.append(z)
        acts.append(a)
    return pre, acts


def forward(model: MlpModel, features) -> np.ndarray:
    """One prediction per feature row."""
    X = _check_input(model, features)
    a = X
    for spec, W, b in zip(model.layers, model.weights, model.biases):
        a = _activate(a @ W + b, spec.activation)
    return a[:, 0]


def penalty(model: MlpModel) -> float:
    total = 0.0
    for spec, W, b in zip(model.layers, model.weights, model.biases):
        if spec.l1:
            total += spec.l1 * (np.abs(W).sum() + np.abs(b).sum())
        if spec.l2:
            total += spec.l2 * (np.square(W).sum() + np.square(b).sum())
    return float(total)


def _targets(labels, m: int) -> np.ndarray:
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if len(y) != m:
        raise ShapeError(f"{m} feature rows but {len(y)} labels")
    if m == 0:
        raise DomainError("loss of an empty batch")
    return y


def loss(model: MlpModel, features, labels) -> float:
    """Mean squared error plus the per-layer L1/L2 penalties on weights and biases."""
    X = _check_input(model, features)
    y = _targets(labels, len(X))
    r = forward(model, X) - y
    return float(np.mean(r * r)) + penalty(model)


def gradients(model: MlpModel, features, labels):
    """Loss and its gradient, returned as ``(loss, [dW0, db0, dW1, db1, ...])``.

    The ReLU derivative at exactly 0 and the L1 subgradient at exactly 0 are
    both taken as 0.
    """
    X = _check_input(model, features)
    y = _targets(labels, len(X))
    pre, acts = _forward_cached(model, X)
    r = acts[-1][:, 0] - y
    m = len(y)
    value = float(np.mean(r * r)) + penalty(model)

    grads: list[np.ndarray] = [None] * (2 * len(model.layers))  # type: ignore[list-item]
    delta = (2.0 / m) * r.reshape(-1, 1)
    for k in range(len(model.layers) - 1, -1, -1):
        spec, W, b = model.layers[k], model.weights[k], model.biases[k]
        if spec.activation == RELU:
            delta = delta * (pre[k] > 0)
        dW = acts[k].T @ delta
        db = delta.sum(axis=0)
        if spec.l1:
            dW += spec.l1 * np.sign(W)
            db += spec.l1 * np.sign(b)
        if spec.l2:
            dW += 2.0 * spec.l2 * W
            db += 2.0 * spec.l2 * b
        grads[2 * k], grads[2 * k + 1] = dW, db
        if k:
            delta = delta @ W.T
    return value, grads
