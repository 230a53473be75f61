"""Finite-difference check of the backpropagated gradient."""
from __future__ import annotations

import numpy as np

from .model import MlpModel, gradients, loss


def relative_error(a, b, floor: float = 1e-8) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def gradient_check(model: MlpModel, features, labels, epsilon: float = 1e-5, seed: int = 0) -> float:
    """Worst relative error between analytic and central-difference gradients.

    Parameters sitting exactly at 0 are moved to a small random value first;
    both ReLU and the L1 penalty have a kink there.  Relative errors are
    measured against ``max(|analytic|, |numeric|, 1e-8)``.
    """
    model = model.copy()
    rng = np.random.default_rng(seed)
    for p in model.parameters():
        zero = p == 0
        if zero.any():
            p[zero] = rng.uniform(0.05, 0.5, zero.sum()) * rng.choice([-1.0, 1.0], zero.sum())

    _, analytic = gradients(model, features, labels)
    worst = 0.0
    for p, g in zip(model.parameters(), analytic):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + epsilon
            up = loss(model, features, labels)
            flat[i] = keep - epsilon
            down = loss(model, features, labels)
            flat[i] = keep
            numeric = (up - down) / (2.0 * epsilon)
            worst = max(worst, float(relative_error(gflat[i], numeric)))
    return worst
