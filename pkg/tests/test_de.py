import json
from functools import partial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from strided_rul.de import (
    DeConfig,
    SearchBounds,
    latin_hypercube,
    optimize,
    round_half_away,
    round_to_integer_lattice,
)
from strided_rul.errors import ConfigError, DomainError
from strided_rul.windowing import DataParams

FD001 = SearchBounds.for_subset("FD001")


def _sphere(center, v):
    return float(sum((a - b) ** 2 for a, b in zip(v.as_tuple(), center)))


def sphere(center):
    # partial keeps the objective picklable for worker processes
    return partial(_sphere, center)


class Recorder:
    def __init__(self, f):
        self.f, self.seen = f, []

    def __call__(self, v):
        self.seen.append(v)
        return self.f(v)


def test_bounds_per_subset():
    assert [SearchBounds.for_subset(s).n_w for s in ("FD001", "FD002", "FD003", "FD004")] == [
        (1, 30), (1, 20), (1, 30), (1, 18)]
    assert FD001.n_s == (1, 10) and FD001.r_e == (90, 140)
    assert FD001.size == 30 * 10 * 51
    with pytest.raises(DomainError):
        FD001.check(DataParams(31, 1, 100))


@pytest.mark.parametrize("x, expected", [(0.5, 1), (-0.5, -1), (1.5, 2), (2.5, 3), (-2.5, -3), (2.4999, 2)])
def test_round_half_away(x, expected):
    assert round_half_away(x) == expected


def test_lattice_rounding_examples():
    assert round_to_integer_lattice((24.4, 0.6, 127.5), FD001) == DataParams(24, 1, 128)
    assert round_to_integer_lattice((35.0, 12.9, 80.1), FD001) == DataParams(30, 10, 90)


def test_lattice_rounding_random_reals_stay_in_bounds():
    rng = np.random.default_rng(0)
    for x in rng.uniform(-50, 200, size=(1000, 3)):
        v = round_to_integer_lattice(x, FD001)
        assert FD001.contains(v)
        inside = np.clip(x, FD001.lower, FD001.upper)
        assert np.all(np.abs(np.array(v.as_tuple()) - inside) <= 0.5)


@given(st.integers(2, 40), st.integers(1, 4), st.integers(0, 1000))
def test_latin_hypercube_strata(n, d, seed):
    u = latin_hypercube(np.random.default_rng(seed), n, d)
    assert u.shape == (n, d)
    for j in range(d):
        assert sorted(np.floor(u[:, j] * n).astype(int)) == list(range(n))


@pytest.mark.parametrize("kw", [{"population_size": 3}, {"crossover": 1.5}, {"strategy": "rand1bin"},
                                {"mutation": (0.9, 0.5)}, {"generations": -1}])
def test_invalid_config(kw):
    with pytest.raises(ConfigError):
        DeConfig(**kw)


def test_budget():
    assert DeConfig().budget == 372


def test_raw_counter_equals_budget_and_unique_counter_counts_cache_misses():
    rec = Recorder(sphere((17, 4, 115)))
    result = optimize(rec, FD001, DeConfig(rng_seed=1))
    assert result.function_evaluations == 372
    assert result.unique_evaluations == len(rec.seen) == len(set(rec.seen))
    assert result.unique_evaluations <= 372


def test_every_evaluated_point_is_in_bounds():
    bounds = SearchBounds.for_subset("FD004")
    rec = Recorder(sphere((1, 1, 90)))
    result = optimize(rec, bounds, DeConfig(generations=10, rng_seed=5))
    assert all(bounds.contains(v) for v in rec.seen)
    assert all(bounds.contains(v) for v in result.population)


def test_best_trace_is_monotone_and_complete(tmp_path):
    path = tmp_path / "trace.jsonl"
    result = optimize(sphere((9, 7, 101)), FD001, DeConfig(generations=8, rng_seed=2), trace_path=path)
    best = [row["best_score"] for row in result.trace]
    assert all(a >= b for a, b in zip(best, best[1:]))
    assert [row["generation"] for row in result.trace] == list(range(9))
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert rows == result.trace
    assert set(rows[0]) == {"generation", "best_v", "best_score", "mean_score", "evaluations",
                            "unique_evaluations"}
    assert rows[-1]["evaluations"] == 12 * 9


def test_same_seed_same_result():
    a = optimize(sphere((5, 5, 120)), FD001, DeConfig(generations=6, rng_seed=3))
    b = optimize(sphere((5, 5, 120)), FD001, DeConfig(generations=6, rng_seed=3))
    assert a == b


def test_zero_generations_is_initial_population_only():
    result = optimize(sphere((5, 5, 120)), FD001, DeConfig(generations=0))
    assert result.function_evaluations == 12
    assert result.best_score == min(result.scores)


def test_nan_scores_never_win():
    def f(v):
        return float("nan") if v.n_s > 1 else float(v.n_w)
    result = optimize(f, FD001, DeConfig(generations=10, rng_seed=0))
    assert result.best_v.n_s == 1 and np.isfinite(result.best_score)


@pytest.mark.parametrize("center", [(17, 4, 115), (30, 1, 90), (1, 10, 140)])
def test_sphere_optimum_found(center):
    hits = sum(optimize(sphere(center), FD001, DeConfig(rng_seed=s)).best_v.as_tuple() == center
               for s in range(20))
    assert hits >= 19


def test_parallel_workers_give_same_result():
    a = optimize(sphere((12, 3, 99)), FD001, DeConfig(generations=3, rng_seed=4))
    b = optimize(sphere((12, 3, 99)), FD001, DeConfig(generations=3, rng_seed=4), workers=2)
    assert a == b
