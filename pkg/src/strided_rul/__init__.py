"""Remaining-useful-life estimation with strided time windows, a small MLP
regressor and a differential-evolution search over the data parameters."""

from .cmapss import (
    SELECTED_SENSORS,
    NormalizationStats,
    TrajectorySet,
    apply_normalization,
    fit_normalization,
    load_subset,
    parse_trajectories,
    select_sensors,
)
from .de import DeConfig, DeResult, SearchBounds, optimize, round_to_integer_lattice
from .metrics import error_quartiles, rhs, rmse
from .windowing import (
    DataParams,
    WindowedDataset,
    build_test_features,
    build_training_windows,
    piecewise_rul,
    window_count,
)

__version__ = "0.1.0"

__all__ = [
    "SELECTED_SENSORS", "NormalizationStats", "TrajectorySet", "apply_normalization",
    "fit_normalization", "load_subset", "parse_trajectories", "select_sensors",
    "DeConfig", "DeResult", "SearchBounds", "optimize", "round_to_integer_lattice",
    "error_quartiles", "rhs", "rmse",
    "DataParams", "WindowedDataset", "build_test_features", "build_training_windows",
    "piecewise_rul", "window_count",
]
