"""Reading and preprocessing of C-MAPSS style run-to-failure records.

Each row of a trajectory file holds 26 whitespace separated numbers::

    engine_id  cycle  setting_1..setting_3  sensor_1..sensor_21

Test subsets come with a companion file holding the true remaining useful
life of every test engine, one integer per line, in engine order.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .errors import DomainError, ParseError, ValidationError

SUBSETS = ("FD001", "FD002", "FD003", "FD004")
N_COLUMNS = 26
N_SETTINGS = 3
N_SENSORS = 21
ALL_SENSORS = tuple(range(1, N_SENSORS + 1))
# 1-based sensor numbers kept as model inputs
SELECTED_SENSORS = (2, 3, 4, 7, 8, 9, 11, 12, 13, 14, 15, 17, 20, 21)

# (train, test) trajectory counts of the public release
TRAJECTORY_COUNTS = {
    "FD001": (100, 100),
    "FD002": (260, 259),
    "FD003": (100, 100),
    "FD004": (248, 248),
}

TRAIN = "train"
TEST = "test"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Engine:
    """Cycle-ordered records of a single engine."""

    engine_id: int
    cycles: np.ndarray
    settings: np.ndarray
    sensors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cycles", _frozen(np.asarray(self.cycles, dtype=np.int64)))
        object.__setattr__(self, "settings", _frozen(np.asarray(self.settings, dtype=np.float64)))
        object.__setattr__(self, "sensors", _frozen(np.asarray(self.sensors, dtype=np.float64)))

    @property
    def length(self) -> int:
        return len(self.cycles)


@dataclass(frozen=True)
class TrajectorySet:
    engines: tuple[Engine, ...]
    kind: str
    subset_id: str
    true_rul: tuple[int, ...] | None = None
    sensor_ids: tuple[int, ...] = ALL_SENSORS
    normalized: bool = False

    def __post_init__(self):
        if self.kind not in (TRAIN, TEST):
            raise ValidationError(f"unknown trajectory kind {self.kind!r}")
        if any(e.length < 1 for e in self.engines):
            raise ValidationError("every engine needs at least one record")
        if self.kind == TEST:
            if self.true_rul is None or len(self.true_rul) != len(self.engines):
                n = None if self.true_rul is None else len(self.true_rul)
                raise ValidationError(
                    f"test set has {len(self.engines)} engines but {n} true RUL values"
                )

    def __len__(self) -> int:
        return len(self.engines)

    @property
    def engine_ids(self) -> list[int]:
        return [e.engine_id for e in self.engines]

    @property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.engines], dtype=np.int64)

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_ids)

    def stacked_sensors(self) -> np.ndarray:
        return np.concatenate([e.sensors for e in self.engines], axis=0)

    def subset(self, indices: Iterable[int]) -> "TrajectorySet":
        """Engines at the given positions, keeping their relative order."""
        idx = list(indices)
        rul = None if self.true_rul is None else tuple(self.true_rul[i] for i in idx)
        return replace(self, engines=tuple(self.engines[i] for i in idx), true_rul=rul)


def _as_text(source: str | TextIO) -> TextIO:
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def _integral(value: float, what: str, line: int) -> int:
    if not float(value).is_integer() or value < 1:
        raise ParseError(f"{what} must be a positive integer, got {value!r}", line)
    return int(value)


def parse_trajectories(
    source: str | TextIO,
    kind: str,
    subset_id: str,
    rul_source: str | TextIO | None = None,
) -> TrajectorySet:
    """Parse trajectory text (a string or an open text stream).

    Engines keep the order in which their ids first appear.  Rows of one
    engine are sorted by cycle; after sorting the cycles must run 1, 2, ..., T.
    """
    rows: dict[int, list[tuple[int, int, list[float]]]] = {}
    for lineno, raw in enumerate(_as_text(source), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        if len(tokens) != N_COLUMNS:
            raise ParseError(f"expected {N_COLUMNS} columns, found {len(tokens)}", lineno)
        try:
            values = [float(t) for t in tokens]
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        engine_id = _integral(values[0], "engine id", lineno)
        cycle = _integral(values[1], "cycle", lineno)
        rows.setdefault(engine_id, []).append((cycle, lineno, values[2:]))

    engines = []
    for engine_id, records in rows.items():
        records.sort(key=lambda r: r[0])
        cycles = np.array([r[0] for r in records], dtype=np.int64)
        expected = np.arange(1, len(cycles) + 1)
        if not np.array_equal(cycles, expected):
            bad = int(np.argmax(cycles != expected))
            raise ValidationError(
                f"engine {engine_id}: cycles are not consecutive from 1 "
                f"(cycle {cycles[bad]} at position {bad + 1}, line {records[bad][1]})"
            )
        block = np.array([r[2] for r in records], dtype=np.float64)
        engines.append(Engine(engine_id, cycles, block[:, :N_SETTINGS], block[:, N_SETTINGS:]))

    true_rul = None
    if rul_source is not None:
        true_rul = parse_rul(rul_source)
    elif kind == TEST:
        raise ValidationError("test trajectories need their true RUL values")
    return TrajectorySet(tuple(engines), kind, subset_id, true_rul)


def parse_rul(source: str | TextIO) -> tuple[int, ...]:
    out = []
    for lineno, raw in enumerate(_as_text(source), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        if len(tokens) != 1:
            raise ParseError(f"expected one RUL value, found {len(tokens)}", lineno)
        try:
            value = float(tokens[0])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if not value.is_integer() or value < 0:
            raise ParseError(f"RUL must be a non-negative integer, got {tokens[0]!r}", lineno)
        out.append(int(value))
    return tuple(out)


def subset_paths(data_dir: str | os.PathLike, subset_id: str) -> dict[str, Path]:
    if subset_id not in SUBSETS:
        raise DomainError(f"unknown subset {subset_id!r}; expected one of {SUBSETS}")
    root = Path(data_dir)
    return {
        "train": root / f"train_{subset_id}.txt",
        "test": root / f"test_{subset_id}.txt",
        "rul": root / f"RUL_{subset_id}.txt",
    }


def has_subset(data_dir: str | os.PathLike | None, subset_id: str) -> bool:
    if not data_dir:
        return False
    return all(p.is_file() for p in subset_paths(data_dir, subset_id).values())


def read_trajectories(path, kind: str, subset_id: str, rul_path=None) -> TrajectorySet:
    with open(path, encoding="utf-8") as fh:
        if rul_path is None:
            return parse_trajectories(fh, kind, subset_id)
        with open(rul_path, encoding="utf-8") as rh:
            return parse_trajectories(fh, kind, subset_id, rh)


def load_subset(data_dir: str | os.PathLike, subset_id: str) -> tuple[TrajectorySet, TrajectorySet]:
    """Read the raw train and test sets of one subset from ``data_dir``."""
    paths = subset_paths(data_dir, subset_id)
    train = read_trajectories(paths["train"], TRAIN, subset_id)
    test = read_trajectories(paths["test"], TEST, subset_id, paths["rul"])
    return train, test


def select_sensors(trajectories: TrajectorySet, sensor_ids=SELECTED_SENSORS) -> TrajectorySet:
    """Project every engine onto the given 1-based sensor numbers."""
    if tuple(trajectories.sensor_ids) != ALL_SENSORS:
        raise ValidationError(
            f"sensor selection needs all {N_SENSORS} sensors, set has {trajectories.n_sensors}"
        )
    cols = np.array(sensor_ids) - 1
    engines = tuple(replace(e, sensors=e.sensors[:, cols]) for e in trajectories.engines)
    return replace(trajectories, engines=engines, sensor_ids=tuple(sensor_ids))


@dataclass(frozen=True)
class NormalizationStats:
    """Per-sensor minimum and maximum fitted on a training set."""

    minimum: np.ndarray
    maximum: np.ndarray
    sensor_ids: tuple[int, ...]
    subset_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "minimum", _frozen(np.asarray(self.minimum, dtype=np.float64)))
        object.__setattr__(self, "maximum", _frozen(np.asarray(self.maximum, dtype=np.float64)))
        if np.any(self.minimum > self.maximum):
            raise ValidationError("normalization minimum exceeds maximum")

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum

    def transform(self, values: np.ndarray) -> np.ndarray:
        """Map raw readings to [-1, 1]; constant sensors map to 0."""
        span = self.span
        constant = span == 0
        safe = np.where(constant, 1.0, span)
        out = 2.0 * (values - self.minimum) / safe - 1.0
        return np.where(constant, 0.0, out)

    def inverse(self, values: np.ndarray) -> np.ndarray:
        """Undo :meth:`transform` (constant sensors come back as their value)."""
        return (np.asarray(values) + 1.0) * 0.5 * self.span + self.minimum


def fit_normalization(train: TrajectorySet) -> NormalizationStats:
    if train.kind != TRAIN:
        raise DomainError("normalization statistics are fitted on training data only")
    stacked = train.stacked_sensors()
    return NormalizationStats(
        stacked.min(axis=0), stacked.max(axis=0), tuple(train.sensor_ids), train.subset_id
    )


def apply_normalization(trajectories: TrajectorySet, stats: NormalizationStats) -> TrajectorySet:
    if tuple(stats.sensor_ids) != tuple(trajectories.sensor_ids):
        raise ValidationError("normalization stats were fitted on a different sensor selection")
    if stats.subset_id and trajectories.subset_id and stats.subset_id != trajectories.subset_id:
        raise ValidationError(
            f"stats fitted on {stats.subset_id} applied to {trajectories.subset_id}"
        )
    engines = tuple(replace(e, sensors=stats.transform(e.sensors)) for e in trajectories.engines)
    return replace(trajectories, engines=engines, normalized=True)


@dataclass(frozen=True)
class PreparedSubset:
    """Sensor-selected, normalized train/test pair of a subset."""

    train: TrajectorySet
    test: TrajectorySet
    stats: NormalizationStats = field(repr=False)


def prepare(train: TrajectorySet, test: TrajectorySet) -> PreparedSubset:
    train = select_sensors(train)
    test = select_sensors(test)
    stats = fit_normalization(train)
    return PreparedSubset(apply_normalization(train, stats), apply_normalization(test, stats), stats)


def load_prepared(data_dir, subset_id: str) -> PreparedSubset:
    return prepare(*load_subset(data_dir, subset_id))
