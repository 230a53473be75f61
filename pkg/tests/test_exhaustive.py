import math

import pytest

from strided_rul.de import DeConfig, SearchBounds, optimize
from strided_rul.errors import ConfigError
from strided_rul.exhaustive import GridSpec, enumerate_grid, exhaustive_min, read_table
from strided_rul.fitness import FitnessResult, RulFitness
from strided_rul.regressor import TrainConfig
from strided_rul.windowing import DataParams


def test_full_grid_cardinalities():
    assert GridSpec.for_subset("FD001").cardinality == 8160
    assert GridSpec.for_subset("FD002").cardinality == 3060
    assert len(enumerate_grid(GridSpec.for_subset("FD002"))) == 3060


def test_single_point_grid():
    grid = GridSpec((15, 15), (1, 1), (90, 90))
    assert enumerate_grid(grid) == [DataParams(15, 1, 90)]


def test_coarse_grid():
    grid = GridSpec.for_subset("FD001", coarse=True)
    assert list(grid.axes()[2]) == [90, 100, 110, 120, 130, 140]
    assert grid.cardinality == 16 * 10 * 6


def test_lexicographic_order():
    points = enumerate_grid(GridSpec((15, 16), (1, 2), (90, 91)))
    assert [p.as_tuple() for p in points] == sorted(p.as_tuple() for p in points)
    assert points[0] == DataParams(15, 1, 90) and points[1] == DataParams(15, 1, 91)


def test_invalid_grid():
    with pytest.raises(ConfigError):
        GridSpec((20, 15))


def _planted(v):
    return {DataParams(15, 1, 90): 3.0, DataParams(15, 1, 91): 1.0, DataParams(15, 1, 92): 2.0}[v]


def test_planted_minimum():
    result = exhaustive_min(_planted, GridSpec((15, 15), (1, 1), (90, 92)))
    assert result.argmin == DataParams(15, 1, 91) and result.min_score == 1.0
    assert result.argmax == DataParams(15, 1, 90) and result.max_score == 3.0
    assert result.evaluations == 3


def _flaky(v):
    if v.r_e == 91:
        raise RuntimeError("boom")
    if v.r_e == 92:
        return FitnessResult(math.inf, math.inf, 0, "no-windows")
    return FitnessResult(5.0, 1.0, 10)


def test_failed_points_recorded_but_excluded(tmp_path):
    path = tmp_path / "grid.csv"
    result = exhaustive_min(_flaky, GridSpec((15, 15), (1, 1), (90, 93)), table_path=path)
    statuses = [row.status for row in result.table]
    assert statuses[0] == "ok" and statuses[1].startswith("error: RuntimeError")
    assert statuses[2] == "no-windows"
    assert result.argmin == DataParams(15, 1, 90) and result.min_score == 5.0
    back = read_table(path)
    assert [r.status for r in back] == statuses
    assert math.isnan(back[1].rmse)


def test_table_is_reproducible(tmp_path):
    grid = GridSpec((15, 16), (1, 3), (90, 100), r_e_step=5)
    exhaustive_min(_sum_score, grid, table_path=tmp_path / "a.csv")
    exhaustive_min(_sum_score, grid, workers=2, table_path=tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def _sum_score(v):
    return float(v.n_w * 0.1 + v.n_s - v.r_e * 0.01)


def test_de_never_beats_exhaustive_minimum(small_prepared):
    # tiny real landscape: short training on synthetic engines
    bounds = SearchBounds((2, 4), (1, 2), (90, 92))
    fitness = RulFitness(small_prepared.train, bounds, TrainConfig(
        epochs=2, batch_size=64, validation_fraction=0.1))
    grid = GridSpec(bounds.n_w, bounds.n_s, bounds.r_e)
    exact = exhaustive_min(fitness.evaluate, grid)
    de = optimize(fitness, bounds, DeConfig(population_size=4, generations=3, rng_seed=0))
    assert exact.evaluations == 18
    assert de.best_score >= exact.min_score
    assert math.isfinite(exact.min_score)
    row = next(r for r in exact.table if r.v == de.best_v)
    assert row.rmse == de.best_score
