"""Strided time windows over normalized trajectories.

A window of ``n_w`` consecutive cycles is flattened time-major (all sensors
of the first cycle, then all sensors of the next cycle, ...) into one feature
row.  Training windows start at the first cycle and advance by ``n_s``
cycles; a trailing partial window is dropped.  The label of a window is the
piecewise-linear RUL at its last cycle: flat at ``R_e`` early in life, then
falling by one per cycle to zero at failure.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .cmapss import TEST, TRAIN, TrajectorySet
from .errors import DomainError, ValidationError


@dataclass(frozen=True, order=True)
class DataParams:
    """Window size, window stride and early-RUL plateau, all in cycles."""

    n_w: int
    n_s: int
    r_e: int

    def __post_init__(self):
        for name in ("n_w", "n_s", "r_e"):
            value = getattr(self, name)
            if isinstance(value, (bool, np.bool_)) or int(value) != value:
                raise DomainError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
            if value < 1:
                raise DomainError(f"{name} must be positive, got {value}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.n_w, self.n_s, self.r_e)

    @classmethod
    def parse(cls, text: str) -> "DataParams":
        parts = [p.strip() for p in text.replace("(", "").replace(")", "").split(",")]
        if len(parts) != 3:
            raise DomainError(f"expected 'n_w,n_s,r_e', got {text!r}")
        try:
            return cls(*(int(p) for p in parts))
        except ValueError:
            raise DomainError(f"expected three integers, got {text!r}") from None

    def __str__(self) -> str:
        return f"{self.n_w},{self.n_s},{self.r_e}"


@dataclass(frozen=True)
class WindowedDataset:
    features: np.ndarray
    labels: np.ndarray
    engine_ids: np.ndarray
    params: DataParams
    n_sensors: int
    skipped_engines: tuple[int, ...] = ()
    padded_engines: tuple[int, ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = len(self.labels)
        if self.features.shape != (m, self.n_sensors * self.params.n_w):
            raise ValidationError(
                f"features {self.features.shape} do not match {m} rows of "
                f"{self.n_sensors}x{self.params.n_w}"
            )
        if len(self.engine_ids) != m:
            raise ValidationError("engine_ids length differs from label count")
        for a in (self.features, self.labels, self.engine_ids):
            a.setflags(write=False)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def width(self) -> int:
        return self.features.shape[1]


def window_count(engine_length: int, n_w: int, n_s: int) -> int:
    """Number of full windows an engine of ``engine_length`` cycles yields."""
    if n_w < 1 or n_s < 1:
        raise DomainError("window size and stride must be positive")
    if engine_length < n_w:
        return 0
    return (engine_length - n_w) // n_s + 1


def piecewise_rul(failure_cycle: int, cycle, r_e: int):
    """``min(r_e, failure_cycle - cycle)``; ``cycle`` may be an array."""
    c = np.asarray(cycle)
    if np.any(c < 1) or np.any(c > failure_cycle):
        raise DomainError(f"cycle must lie in [1, {failure_cycle}], got {cycle!r}")
    out = np.minimum(r_e, failure_cycle - c)
    return int(out) if out.ndim == 0 else out


def _windows(sensors: np.ndarray, n_w: int, n_s: int) -> np.ndarray:
    s = sensors.shape[1]
    view = sliding_window_view(sensors, (n_w, s))[::n_s, 0]
    return view.reshape(len(view), n_w * s)


def _last_window(sensors: np.ndarray, n_w: int) -> tuple[np.ndarray, bool]:
    if len(sensors) >= n_w:
        return sensors[-n_w:].reshape(-1), False
    pad = np.repeat(sensors[:1], n_w - len(sensors), axis=0)
    return np.concatenate([pad, sensors]).reshape(-1), True


def build_training_windows(trajectories: TrajectorySet, params: DataParams) -> WindowedDataset:
    if trajectories.kind != TRAIN:
        raise DomainError("training windows need run-to-failure (train) trajectories")
    n_w, n_s, r_e = params.as_tuple()
    s = trajectories.n_sensors
    feats, labels, ids, skipped = [], [], [], []
    for engine in trajectories.engines:
        T = engine.length
        k = window_count(T, n_w, n_s)
        if k == 0:
            skipped.append(engine.engine_id)
            continue
        last_cycles = n_w + n_s * np.arange(k)
        feats.append(_windows(engine.sensors, n_w, n_s))
        labels.append(piecewise_rul(T, last_cycles, r_e))
        ids.append(np.full(k, engine.engine_id))
    if feats:
        X = np.ascontiguousarray(np.concatenate(feats))
        y = np.concatenate(labels).astype(np.int64)
        eid = np.concatenate(ids).astype(np.int64)
    else:
        X = np.empty((0, s * n_w))
        y = np.empty(0, dtype=np.int64)
        eid = np.empty(0, dtype=np.int64)
    return WindowedDataset(X, y, eid, params, s, skipped_engines=tuple(skipped))


def build_test_features(
    trajectories: TrajectorySet, params: DataParams, cap_rul: bool = False
) -> WindowedDataset:
    """One row per engine: its final ``n_w`` cycles, labelled with the true RUL.

    Engines shorter than ``n_w`` are left-padded with copies of their first
    cycle.  With ``cap_rul`` the labels are clipped to ``R_e``.
    """
    if trajectories.kind != TEST:
        raise DomainError("test features need test trajectories")
    rows, padded = [], []
    for engine in trajectories.engines:
        row, was_padded = _last_window(engine.sensors, params.n_w)
        rows.append(row)
        if was_padded:
            padded.append(engine.engine_id)
    y = np.array(trajectories.true_rul, dtype=np.int64)
    if cap_rul:
        y = np.minimum(y, params.r_e)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), trajectories.n_sensors * params.n_w)
    return WindowedDataset(
        X, y, np.array(trajectories.engine_ids, dtype=np.int64), params,
        trajectories.n_sensors, padded_engines=tuple(padded),
    )


def split_engines(trajectories: TrajectorySet, holdout_fraction: float):
    """Hold out the engines with the highest ids; returns ``(fit, holdout)``."""
    if not 0.0 <= holdout_fraction < 1.0:
        raise DomainError("holdout fraction must lie in [0, 1)")
    n = len(trajectories)
    k = int(round(holdout_fraction * n))
    if holdout_fraction > 0 and n >= 2:
        k = min(max(k, 1), n - 1)
    order = sorted(range(n), key=lambda i: trajectories.engines[i].engine_id)
    held = set(order[n - k:]) if k else set()
    fit = [i for i in range(n) if i not in held]
    return trajectories.subset(fit), trajectories.subset(sorted(held))


def build_validation_features(
    trajectories: TrajectorySet,
    params: DataParams,
    seed: int = 0,
    samples_per_engine: int = 10,
    max_rul: int = 140,
    cap_rul: bool = False,
) -> WindowedDataset:
    """Test-like rows cut from run-to-failure engines.

    Each engine is truncated ``samples_per_engine`` times; the true RUL at
    each cut is drawn uniformly from ``[1, min(T - 1, max_rul)]``.  Cuts only
    depend on ``seed`` and the engine, never on ``params``, so every
    candidate parameter triple is scored against the same targets.
    """
    if trajectories.kind != TRAIN:
        raise DomainError("validation cuts need run-to-failure (train) trajectories")
    rows, labels, ids, padded = [], [], [], set()
    for engine in trajectories.engines:
        T = engine.length
        if T < 2:
            continue
        rng = np.random.default_rng([seed, engine.engine_id])
        ruls = rng.integers(1, min(T - 1, max_rul) + 1, size=samples_per_engine)
        for r in ruls:
            row, was_padded = _last_window(engine.sensors[: T - r], params.n_w)
            rows.append(row)
            labels.append(min(int(r), params.r_e) if cap_rul else int(r))
            ids.append(engine.engine_id)
            if was_padded:
                padded.add(engine.engine_id)
    s = trajectories.n_sensors
    X = np.array(rows, dtype=np.float64).reshape(len(rows), s * params.n_w)
    return WindowedDataset(
        X, np.array(labels, dtype=np.int64), np.array(ids, dtype=np.int64), params, s,
        padded_engines=tuple(sorted(padded)),
    )


def to_csv(dataset: WindowedDataset, path: str | os.PathLike) -> None:
    """Write ``f0..f{k-1}, label, engine_id`` rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{i}" for i in range(dataset.width)] + ["label", "engine_id"])
        for row, label, eid in zip(dataset.features, dataset.labels, dataset.engine_ids):
            w.writerow([format(v, ".17g") for v in row] + [int(label), int(eid)])


def read_csv(path: str | os.PathLike, params: DataParams, n_sensors: int = 14) -> WindowedDataset:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return WindowedDataset(
        np.ascontiguousarray(data[:, :-2]), data[:, -2].astype(np.int64),
        data[:, -1].astype(np.int64), params, n_sensors,
    )
