"""Scores for RUL predictions.

Errors are always ``prediction - truth``: positive errors are late
predictions (the engine fails before the predicted time).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError

# exp(t) overflows float64 just above t = 709.78
_EXP_LIMIT = 709.0
EARLY_SCALE = 13.0
LATE_SCALE = 10.0


def _errors(e) -> np.ndarray:
    e = np.asarray(e, dtype=np.float64).ravel()
    if e.size == 0:
        raise DomainError("score of an empty error vector")
    return e


def rmse(e) -> float:
    e = _errors(e)
    return math.sqrt(float(np.mean(e * e)))


def rhs_terms(e) -> np.ndarray:
    """Per-engine asymmetric penalty; late errors decay on a 10-cycle scale,
    early errors on a 13-cycle scale."""
    e = _errors(e)
    t = np.where(e < 0, -e / EARLY_SCALE, e / LATE_SCALE)
    over = t > _EXP_LIMIT
    if np.any(over):
        warnings.warn(
            f"RUL health score saturated for {int(over.sum())} error(s), "
            f"largest |e| = {float(np.max(np.abs(e))):.6g}",
            RuntimeWarning,
            stacklevel=3,
        )
    with np.errstate(over="ignore"):
        return np.where(over, np.inf, np.expm1(np.minimum(t, _EXP_LIMIT)))


def rhs(e, average: bool = True) -> float:
    """RUL health score: mean of the per-engine penalties (sum with
    ``average=False``, as some of the C-MAPSS literature reports it)."""
    s = rhs_terms(e)
    return float(np.mean(s) if average else np.sum(s))


@dataclass(frozen=True)
class Quartiles:
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    def as_dict(self) -> dict:
        return asdict(self)


def error_quartiles(values) -> Quartiles:
    """Box-plot statistics: linear-interpolated quartiles, whiskers at the
    most extreme data points within 1.5 IQR of the box (never inside the box,
    the same convention matplotlib uses)."""
    v = np.sort(_errors(values))
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    reach = 1.5 * (q3 - q1)
    low = min(float(v[v >= q1 - reach].min()), float(q1))
    high = max(float(v[v <= q3 + reach].max()), float(q3))
    return Quartiles(float(q1), float(med), float(q3), low, high)


@dataclass(frozen=True)
class Summary:
    min: float
    max: float
    avg: float
    std: float

    @classmethod
    def of(cls, values) -> "Summary":
        v = _errors(values)
        return cls(float(v.min()), float(v.max()), float(v.mean()), float(v.std()))

    def as_dict(self) -> dict:
        return asdict(self)
