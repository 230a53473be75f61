"""Brute-force scoring of every DataParams triple on a grid."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

from .de import PLATEAU_RANGE, STRIDE_RANGE, WINDOW_BOUND
from .errors import ConfigError, DomainError
from .windowing import DataParams

MIN_WINDOW = 15
# R_e step of the down-scaled grid used when a full run is not requested
COARSE_PLATEAU_STEP = 10


@dataclass(frozen=True)
class GridSpec:
    n_w: tuple[int, int]
    n_s: tuple[int, int] = STRIDE_RANGE
    r_e: tuple[int, int] = PLATEAU_RANGE
    r_e_step: int = 1

    def __post_init__(self):
        for name in ("n_w", "n_s", "r_e"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise ConfigError(f"invalid grid range for {name}: {(lo, hi)}")
        if self.r_e_step < 1:
            raise ConfigError("r_e_step must be positive")

    @classmethod
    def for_subset(cls, subset_id: str, coarse: bool = False) -> "GridSpec":
        if subset_id not in WINDOW_BOUND:
            raise DomainError(f"no window bound known for subset {subset_id!r}")
        step = COARSE_PLATEAU_STEP if coarse else 1
        return cls((MIN_WINDOW, WINDOW_BOUND[subset_id]), r_e_step=step)

    def axes(self):
        return (
            range(self.n_w[0], self.n_w[1] + 1),
            range(self.n_s[0], self.n_s[1] + 1),
            range(self.r_e[0], self.r_e[1] + 1, self.r_e_step),
        )

    @property
    def cardinality(self) -> int:
        a, b, c = self.axes()
        return len(a) * len(b) * len(c)


def enumerate_grid(grid: GridSpec) -> list[DataParams]:
    """All grid points ordered by n_w, then n_s, then R_e."""
    nw, ns, re = grid.axes()
    return [DataParams(w, s, r) for w in nw for s in ns for r in re]


@dataclass(frozen=True)
class GridRow:
    v: DataParams
    rmse: float
    rhs: float
    status: str


@dataclass
class ExhaustiveResult:
    argmin: DataParams | None
    min_score: float
    argmax: DataParams | None
    max_score: float
    table: list[GridRow]

    @property
    def evaluations(self) -> int:
        return len(self.table)


def _score(evaluate, v: DataParams) -> GridRow:
    try:
        out = evaluate(v)
    except Exception as exc:  # a failed point must not abort the sweep
        return GridRow(v, math.nan, math.nan, f"error: {type(exc).__name__}: {exc}")
    if hasattr(out, "rmse"):
        return GridRow(v, float(out.rmse), float(out.rhs), getattr(out, "status", "ok"))
    return GridRow(v, float(out), math.nan, "ok")


def exhaustive_min(evaluate, grid: GridSpec, workers: int = 1, table_path=None) -> ExhaustiveResult:
    """Score every grid point; ``evaluate`` returns a float or an object with
    ``rmse``/``rhs``/``status`` attributes.  Points that fail or score a
    non-finite value are kept in the table but excluded from argmin/argmax."""
    points = enumerate_grid(grid)
    score = partial(_score, evaluate)
    if workers > 1:
        # pool.map yields in input order, so the table stays lexicographic
        with ProcessPoolExecutor(max_workers=workers) as pool:
            table = list(pool.map(score, points, chunksize=8))
    else:
        table = [score(v) for v in points]

    argmin = argmax = None
    lo, hi = math.inf, -math.inf
    for row in table:
        if row.status != "ok" or not math.isfinite(row.rmse):
            continue
        if row.rmse < lo:
            argmin, lo = row.v, row.rmse
        if row.rmse > hi:
            argmax, hi = row.v, row.rmse
    if table_path is not None:
        write_table(table, table_path)
    return ExhaustiveResult(argmin, lo, argmax, hi, table)


def _num(x: float) -> str:
    return format(x, ".17g")


def write_table(table: list[GridRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_w", "n_s", "R_e", "rmse", "rhs", "status"])
        for row in table:
            w.writerow([row.v.n_w, row.v.n_s, row.v.r_e, _num(row.rmse), _num(row.rhs), row.status])


def read_table(path) -> list[GridRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            GridRow(DataParams(int(r["n_w"]), int(r["n_s"]), int(r["R_e"])),
                    float(r["rmse"]), float(r["rhs"]), r["status"])
            for r in csv.DictReader(fh)
        ]
