"""Seeded generator of C-MAPSS formatted run-to-failure data.

The engines follow a simple degradation model: every informative sensor sits
at a baseline level until a random onset cycle, then drifts along a convex
curve toward failure.  Sensors that are constant in the public FD001 subset
are constant here too, so sensor selection and normalization see the same
kind of columns they see on real data.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cmapss import ALL_SENSORS, TEST, TRAIN, parse_trajectories

CONSTANT_SENSORS = (1, 5, 6, 10, 16, 18, 19)


@dataclass(frozen=True)
class SyntheticSpec:
    n_train: int = 20
    n_test: int = 20
    min_life: int = 60
    max_life: int = 160
    noise: float = 0.02
    max_test_rul: int = 120
    seed: int = 0


def _engine_rows(rng, engine_id, life, keep, base, slope, spec):
    t = np.arange(1, life + 1)
    onset = rng.uniform(0.2, 0.6) * life
    wear = np.clip((t - onset) / (life - onset), 0.0, None) ** 1.5
    sensors = base + np.outer(wear, slope) + spec.noise * rng.standard_normal((life, len(base)))
    for s in CONSTANT_SENSORS:
        sensors[:, s - 1] = base[s - 1]
    settings = np.column_stack(
        [
            rng.normal(0.0, 0.002, life),
            rng.normal(0.0, 0.0003, life),
            np.full(life, 100.0),
        ]
    )
    rows = []
    for k in range(keep):
        values = [f"{v:.4f}" for v in settings[k]] + [f"{v:.4f}" for v in sensors[k]]
        rows.append(f"{engine_id} {k + 1} " + " ".join(values))
    return rows


def generate(spec: SyntheticSpec = SyntheticSpec()) -> dict[str, str]:
    """Return ``{"train": text, "test": text, "rul": text}`` for ``spec``."""
    if spec.min_life < 2 or spec.max_life < spec.min_life:
        raise ValueError("need 2 <= min_life <= max_life")
    rng = np.random.default_rng(spec.seed)
    n = len(ALL_SENSORS)
    base = rng.uniform(1.0, 10.0, n)
    slope = rng.choice([-1.0, 1.0], n) * rng.uniform(0.2, 1.0, n)

    train_rows = []
    for i in range(spec.n_train):
        life = int(rng.integers(spec.min_life, spec.max_life + 1))
        train_rows += _engine_rows(rng, i + 1, life, life, base, slope, spec)

    test_rows, ruls = [], []
    for i in range(spec.n_test):
        life = int(rng.integers(spec.min_life, spec.max_life + 1))
        rul = int(rng.integers(1, min(life - 1, spec.max_test_rul) + 1))
        test_rows += _engine_rows(rng, i + 1, life, life - rul, base, slope, spec)
        ruls.append(rul)

    return {
        "train": "\n".join(train_rows) + "\n",
        "test": "\n".join(test_rows) + "\n",
        "rul": "\n".join(str(r) for r in ruls) + "\n",
    }


def synthetic_subset(spec: SyntheticSpec = SyntheticSpec(), subset_id: str = "FD001"):
    """Generated data parsed straight into a (train, test) pair."""
    texts = generate(spec)
    train = parse_trajectories(texts["train"], TRAIN, subset_id)
    test = parse_trajectories(texts["test"], TEST, subset_id, texts["rul"])
    return train, test


def write_subset(
    out_dir: str | os.PathLike, subset_id: str = "FD001", spec: SyntheticSpec = SyntheticSpec()
) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    texts = generate(spec)
    paths = {
        "train": out / f"train_{subset_id}.txt",
        "test": out / f"test_{subset_id}.txt",
        "rul": out / f"RUL_{subset_id}.txt",
    }
    for key, path in paths.items():
        path.write_text(texts[key], encoding="utf-8")
    return paths

