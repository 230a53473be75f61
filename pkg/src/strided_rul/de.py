"""Differential evolution (best/1/bin) on the integer lattice of DataParams.

Candidates are real vectors rounded to the nearest integer (halves away from
zero) and clamped into the search box, so the population always holds valid
parameter triples.  The objective is memoized per lattice point: rounding
maps many trial vectors onto the same triple and each objective call may
train a network.
"""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DomainError
from .windowing import DataParams

log = logging.getLogger(__name__)

# Upper window-size bound per subset
WINDOW_BOUND = {"FD001": 30, "FD002": 20, "FD003": 30, "FD004": 18}
STRIDE_RANGE = (1, 10)
PLATEAU_RANGE = (90, 140)


@dataclass(frozen=True)
class SearchBounds:
    n_w: tuple[int, int]
    n_s: tuple[int, int] = STRIDE_RANGE
    r_e: tuple[int, int] = PLATEAU_RANGE

    def __post_init__(self):
        for name in ("n_w", "n_s", "r_e"):
            lo, hi = getattr(self, name)
            if int(lo) != lo or int(hi) != hi or lo < 1 or hi < lo:
                raise ConfigError(f"invalid bound for {name}: {(lo, hi)}")

    @classmethod
    def for_subset(cls, subset_id: str) -> "SearchBounds":
        try:
            return cls((1, WINDOW_BOUND[subset_id]))
        except KeyError:
            raise DomainError(f"no window bound known for subset {subset_id!r}") from None

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.n_w[0], self.n_s[0], self.r_e[0]], dtype=np.float64)

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.n_w[1], self.n_s[1], self.r_e[1]], dtype=np.float64)

    def contains(self, v: DataParams) -> bool:
        return all(lo <= x <= hi for x, lo, hi in zip(v.as_tuple(), self.lower, self.upper))

    def check(self, v: DataParams) -> None:
        if not self.contains(v):
            raise DomainError(
                f"{v.as_tuple()} outside bounds n_w {self.n_w}, n_s {self.n_s}, R_e {self.r_e}"
            )

    @property
    def size(self) -> int:
        return int(np.prod(self.upper - self.lower + 1))


@dataclass(frozen=True)
class DeConfig:
    population_size: int = 12
    generations: int = 30
    mutation: float | tuple[float, float] = (0.5, 1.0)
    crossover: float = 0.7
    strategy: str = "best1bin"
    rng_seed: int = 0
    train_epochs_per_eval: int = 20

    def __post_init__(self):
        if self.population_size < 4:
            raise ConfigError("best1bin needs a population of at least 4")
        if self.generations < 0:
            raise ConfigError("generations must be non-negative")
        if not 0.0 <= self.crossover <= 1.0:
            raise ConfigError("crossover rate must lie in [0, 1]")
        if self.strategy != "best1bin":
            raise ConfigError(f"unsupported strategy {self.strategy!r}")
        if isinstance(self.mutation, (tuple, list)):
            lo, hi = self.mutation
            if not 0 <= lo <= hi <= 2:
                raise ConfigError("mutation range must satisfy 0 <= lo <= hi <= 2")
            object.__setattr__(self, "mutation", (float(lo), float(hi)))
        elif not 0 <= self.mutation <= 2:
            raise ConfigError("mutation factor must lie in [0, 2]")
        if self.train_epochs_per_eval < 1:
            raise ConfigError("train_epochs_per_eval must be positive")

    @property
    def budget(self) -> int:
        """Objective calls of a full run: initial population plus one per
        individual per generation."""
        return self.population_size * (self.generations + 1)


@dataclass
class DeResult:
    best_v: DataParams
    best_score: float
    function_evaluations: int
    unique_evaluations: int
    trace: list[dict] = field(default_factory=list)
    population: list[DataParams] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)


def round_half_away(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def round_to_integer_lattice(candidate: Sequence[float], bounds: SearchBounds) -> DataParams:
    v = np.clip(round_half_away(candidate), bounds.lower, bounds.upper)
    return DataParams(*(int(c) for c in v))


def latin_hypercube(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """``n`` points in the unit cube, one per stratum along every axis."""
    u = (rng.random((n, d)) + np.arange(n)[:, None]) / n
    for j in range(d):
        u[:, j] = u[rng.permutation(n), j]
    return u


def _json_number(x: float):
    return x if math.isfinite(x) else None


class _Memo:
    def __init__(self, objective: Callable[[DataParams], float], workers: int):
        self.objective = objective
        self.workers = workers
        self.cache: dict[DataParams, float] = {}
        self.calls = 0

    def __call__(self, batch: list[DataParams]) -> list[float]:
        self.calls += len(batch)
        todo = list(dict.fromkeys(v for v in batch if v not in self.cache))
        if todo:
            if self.workers > 1 and len(todo) > 1:
                with ProcessPoolExecutor(max_workers=self.workers) as pool:
                    scores = list(pool.map(self.objective, todo))
            else:
                scores = [self.objective(v) for v in todo]
            for v, s in zip(todo, scores):
                s = float(s)
                if math.isnan(s):
                    log.warning("objective returned NaN for %s; treated as +inf", v)
                    s = math.inf
                self.cache[v] = s
        return [self.cache[v] for v in batch]


def optimize(
    objective: Callable[[DataParams], float],
    bounds: SearchBounds,
    config: DeConfig = DeConfig(),
    trace_path=None,
    workers: int = 1,
) -> DeResult:
    """Minimize ``objective`` over the lattice inside ``bounds``.

    Each generation builds all trial vectors from the current population and
    its best member, evaluates them, then greedily replaces every target
    whose trial scores no worse.  Randomness is drawn from streams keyed by
    ``(seed, generation, individual)``, so results do not depend on the
    evaluation order.
    """
    n, d = config.population_size, 3
    lo, hi = bounds.lower, bounds.upper
    evaluate = _Memo(objective, workers)

    init_rng = np.random.default_rng([config.rng_seed, 0])
    unit = latin_hypercube(init_rng, n, d)
    pop = [round_to_integer_lattice(lo + u * (hi - lo), bounds) for u in unit]
    energies = np.array(evaluate(pop))

    best_i = int(np.argmin(energies))
    best_v, best_score = pop[best_i], float(energies[best_i])
    trace = []

    def record(gen: int):
        trace.append({
            "generation": gen,
            "best_v": list(best_v.as_tuple()),
            "best_score": _json_number(best_score),
            "mean_score": _json_number(float(np.mean(energies))),
            "evaluations": evaluate.calls,
            "unique_evaluations": len(evaluate.cache),
        })

    record(0)
    for gen in range(1, config.generations + 1):
        gen_rng = np.random.default_rng([config.rng_seed, gen])
        if isinstance(config.mutation, tuple):
            F = gen_rng.uniform(*config.mutation)
        else:
            F = config.mutation
        base = np.array(pop[int(np.argmin(energies))].as_tuple(), dtype=np.float64)
        vectors = np.array([p.as_tuple() for p in pop], dtype=np.float64)

        trials = []
        for i in range(n):
            rng = np.random.default_rng([config.rng_seed, gen, i + 1])
            r1, r2 = rng.choice([j for j in range(n) if j != i], 2, replace=False)
            mutant = base + F * (vectors[r1] - vectors[r2])
            cross = rng.random(d) < config.crossover
            cross[rng.integers(d)] = True
            trials.append(round_to_integer_lattice(np.where(cross, mutant, vectors[i]), bounds))

        trial_scores = evaluate(trials)
        for i, (t, s) in enumerate(zip(trials, trial_scores)):
            if s <= energies[i]:
                pop[i], energies[i] = t, s
            if s < best_score:
                best_v, best_score = t, s
        record(gen)

    if trace_path is not None:
        write_trace(trace, trace_path)
    return DeResult(best_v, best_score, evaluate.calls, len(evaluate.cache), trace, pop,
                    [float(e) for e in energies])


def write_trace(trace: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in trace:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
