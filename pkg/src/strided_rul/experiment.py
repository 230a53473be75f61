"""End-to-end runs: ingest, search the data parameters, train, evaluate, report."""
from __future__ import annotations

import csv
import json
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import metrics
from .cmapss import PreparedSubset, load_prepared
from .config import ExperimentConfig
from .de import DeResult, SearchBounds, WINDOW_BOUND, optimize
from .errors import ExperimentError, TrainingError
from .fitness import RulFitness
from .regressor import (
    TrainConfig, build_model, forward, preset, save_model, train, with_regularization,
)
from .windowing import (
    DataParams, build_test_features, build_training_windows, build_validation_features,
    split_engines,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
N_SENSORS = 14
# FD003/FD004 share operating conditions with FD001/FD002 and reuse their search
OPTIMIZATION_SOURCE = {"FD003": "FD001", "FD004": "FD002"}

REPORT_FILE = "report.json"
PER_ENGINE_FILE = "per_engine.csv"
FIGURE_FILE = "figure_rul.csv"
BOXPLOT_FILE = "boxplot.csv"
MODEL_FILE = "model.txt"
TRACE_FILE = "de_trace.jsonl"


def derive_seed(master: int, stage: str, index: int = 0) -> int:
    """Stable 32-bit seed for ``(master, stage, index)``."""
    seq = np.random.SeedSequence([int(master), zlib.crc32(stage.encode()), int(index)])
    return int(seq.generate_state(1)[0])


def _num(x: float):
    return float(x) if math.isfinite(x) else None


@dataclass
class EvalReport:
    subset: str
    params: DataParams
    input_width: int
    architecture: str
    parameter_count: int
    repetitions: list[dict]
    per_engine: list[dict]
    best_repetition: int
    quartiles: metrics.Quartiles
    skipped_train_engines: list[int] = field(default_factory=list)
    padded_test_engines: list[int] = field(default_factory=list)
    optimization: dict | None = None
    config: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)

    @property
    def rmse_values(self) -> list[float]:
        return [r["rmse"] for r in self.repetitions]

    @property
    def rhs_values(self) -> list[float]:
        return [r["rhs"] for r in self.repetitions]

    def aggregate(self) -> dict:
        return {
            "rmse": metrics.Summary.of(self.rmse_values).as_dict(),
            "rhs": metrics.Summary.of(self.rhs_values).as_dict(),
        }

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "subset": self.subset,
            "params": {"n_w": self.params.n_w, "n_s": self.params.n_s, "r_e": self.params.r_e},
            "input_width": self.input_width,
            "architecture": self.architecture,
            "parameter_count": self.parameter_count,
            "aggregate": self.aggregate(),
            "repetitions": self.repetitions,
            "best_repetition": self.best_repetition,
            "quartiles": self.quartiles.as_dict(),
            "max_abs_error": max(abs(r["error"]) for r in self.per_engine),
            "skipped_train_engines": self.skipped_train_engines,
            "padded_test_engines": self.padded_test_engines,
            "optimization": self.optimization,
            "per_engine": self.per_engine,
            "seeds": self.seeds,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


@dataclass
class _Outputs:
    """Files written so far; removed again if the run fails."""

    root: Path
    written: list[Path] = field(default_factory=list)

    def path(self, name: str) -> Path:
        p = self.root / name
        self.written.append(p)
        return p

    def discard(self):
        for p in self.written:
            try:
                p.unlink()
            except FileNotFoundError:
                pass


def optimization_subset(config: ExperimentConfig) -> str:
    if config.reoptimize:
        return config.subset
    return OPTIMIZATION_SOURCE.get(config.subset, config.subset)


def search_bounds(config: ExperimentConfig) -> SearchBounds:
    """Bounds valid for both the target subset and the subset searched on."""
    b = min(WINDOW_BOUND[config.subset], WINDOW_BOUND[optimization_subset(config)])
    return SearchBounds((1, b))


def layers_for(config: ExperimentConfig):
    return with_regularization(preset(config.architecture), config.l1, config.l2)


def make_fitness(prepared: PreparedSubset, config: ExperimentConfig) -> RulFitness:
    tc = replace(
        config.train,
        epochs=config.de.train_epochs_per_eval,
        validation_fraction=config.fitness_validation_fraction,
        shuffle_seed=derive_seed(config.seed, "fitness-shuffle"),
    )
    return RulFitness(
        prepared.train, search_bounds(config), tc, layers_for(config),
        model_seed=derive_seed(config.seed, "fitness-model"),
        validation_seed=derive_seed(config.seed, "validation"),
        samples_per_engine=config.validation_samples_per_engine,
    )


def run_optimization(prepared: PreparedSubset, config: ExperimentConfig, trace_path=None) -> DeResult:
    fitness = make_fitness(prepared, config)
    de = replace(config.de, rng_seed=derive_seed(config.seed, "de"))
    return optimize(fitness, fitness.bounds, de, trace_path=trace_path, workers=config.workers)


def final_train_config(config: ExperimentConfig, rep: int) -> TrainConfig:
    return replace(config.train, shuffle_seed=derive_seed(config.seed, "shuffle", rep))


def train_final(prepared: PreparedSubset, params: DataParams, config: ExperimentConfig, rep: int = 0):
    """Train one model on the full training set (minus an optional
    validation split); returns ``(model, history, training dataset)``."""
    tc = final_train_config(config, rep)
    fit_set, holdout = split_engines(prepared.train, tc.validation_fraction)
    data = build_training_windows(fit_set, params)
    validation = None
    if len(holdout):
        validation = build_validation_features(
            holdout, params, seed=derive_seed(config.seed, "validation"),
            samples_per_engine=config.validation_samples_per_engine,
        )
    model = build_model(data.width, layers_for(config), derive_seed(config.seed, "model", rep))
    model, history = train(model, data, tc, validation)
    return model, history, data


def evaluate_model(model, prepared: PreparedSubset, params: DataParams, cap_rul: bool = False):
    test = build_test_features(prepared.test, params, cap_rul=cap_rul)
    pred = forward(model, test.features)
    err = pred - test.labels
    return test, pred, err


def _repetition(args):
    prepared, params, config, rep = args
    model, history, data = train_final(prepared, params, config, rep)
    test, pred, err = evaluate_model(model, prepared, params, config.cap_test_rul)
    row = {
        "index": rep,
        "model_seed": derive_seed(config.seed, "model", rep),
        "shuffle_seed": derive_seed(config.seed, "shuffle", rep),
        "rmse": metrics.rmse(err),
        "rhs": metrics.rhs(err),
        "final_train_loss": history.train_loss[-1],
    }
    return row, model, pred, test, data.skipped_engines


def run_experiment(config: ExperimentConfig) -> EvalReport:
    """Search (or take) the data parameters, train ``repetitions`` models,
    score them on the test set and write the report files to ``config.out``."""
    out = _Outputs(Path(config.out))
    stage = "ingest"
    try:
        out.root.mkdir(parents=True, exist_ok=True)
        prepared = load_prepared(config.data_dir, config.subset)

        stage = "optimize"
        params = config.fixed_params()
        optimization = None
        if params is None:
            source = optimization_subset(config)
            opt_data = prepared if source == config.subset else load_prepared(config.data_dir, source)
            result = run_optimization(opt_data, config, out.path(TRACE_FILE))
            params = result.best_v
            optimization = {
                "subset": source,
                "best_v": list(params.as_tuple()),
                "best_score": _num(result.best_score),
                "function_evaluations": result.function_evaluations,
                "unique_evaluations": result.unique_evaluations,
            }
        else:
            SearchBounds.for_subset(config.subset).check(params)

        stage = "train"
        jobs = [(prepared, params, config, rep) for rep in range(config.repetitions)]
        if config.workers > 1 and config.repetitions > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                results = list(pool.map(_repetition, jobs))
        else:
            results = [_repetition(job) for job in jobs]

        stage = "report"
        rows = [r[0] for r in results]
        best = min(range(len(rows)), key=lambda i: (rows[i]["rmse"], i))
        _, model, pred, test, skipped = results[best]
        per_engine = [
            {"engine_id": int(e), "true_rul": int(t), "predicted_rul": float(p), "error": float(p - t)}
            for e, t, p in zip(test.engine_ids, test.labels, pred)
        ]
        abs_err = np.abs(pred - test.labels)
        report = EvalReport(
            subset=config.subset,
            params=params,
            input_width=N_SENSORS * params.n_w,
            architecture=config.architecture,
            parameter_count=model.parameter_count,
            repetitions=rows,
            per_engine=per_engine,
            best_repetition=best,
            quartiles=metrics.error_quartiles(abs_err),
            skipped_train_engines=list(skipped),
            padded_test_engines=list(test.padded_engines),
            optimization=optimization,
            config=_config_echo(config),
            seeds=_seed_echo(config),
        )
        save_model(model, out.path(MODEL_FILE))
        write_per_engine(report, out.path(PER_ENGINE_FILE))
        emit_figure_data(report, out.root, out)
        out.path(REPORT_FILE).write_text(report.to_json(), encoding="utf-8")
        return report
    except Exception as exc:
        out.discard()
        raise ExperimentError(stage, exc) from exc


def _config_echo(config: ExperimentConfig) -> dict:
    d = config.to_dict()
    # the output location is not part of the experiment
    d.pop("out")
    return d


def _seed_echo(config: ExperimentConfig) -> dict:
    return {
        "master": config.seed,
        "de": derive_seed(config.seed, "de"),
        "fitness_model": derive_seed(config.seed, "fitness-model"),
        "fitness_shuffle": derive_seed(config.seed, "fitness-shuffle"),
        "validation": derive_seed(config.seed, "validation"),
    }


def write_per_engine(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["schema_version", "engine_id", "true_rul", "predicted_rul", "error"])
        for r in report.per_engine:
            w.writerow([SCHEMA_VERSION, r["engine_id"], r["true_rul"],
                        format(r["predicted_rul"], ".17g"), format(r["error"], ".17g")])


def emit_figure_data(report: EvalReport, out_dir, outputs: _Outputs | None = None) -> dict[str, Path]:
    """Write the predicted-vs-true series (sorted by engine id) and box-plot
    statistics of the absolute errors."""
    out_dir = Path(out_dir)
    fig = outputs.path(FIGURE_FILE) if outputs else out_dir / FIGURE_FILE
    box = outputs.path(BOXPLOT_FILE) if outputs else out_dir / BOXPLOT_FILE
    rows = sorted(report.per_engine, key=lambda r: r["engine_id"])
    with open(fig, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subset", "engine_id", "true_rul", "predicted_rul", "error"])
        for r in rows:
            w.writerow([report.subset, r["engine_id"], r["true_rul"],
                        format(r["predicted_rul"], ".17g"), format(r["error"], ".17g")])
    abs_err = np.abs([r["error"] for r in rows])
    q = metrics.error_quartiles(abs_err)
    with open(box, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subset", "n", "q1", "median", "q3", "whisker_low", "whisker_high", "max_abs_error"])
        w.writerow([report.subset, len(rows)] + [format(x, ".17g") for x in
                   (q.q1, q.median, q.q3, q.whisker_low, q.whisker_high, float(abs_err.max()))])
    return {"figure": fig, "boxplot": box}


@dataclass(frozen=True)
class ArchitectureRow:
    architecture: str
    parameter_count: int
    rmse: metrics.Summary | None
    rhs: metrics.Summary | None
    runs: int
    diverged: int


def compare_architectures(
    prepared: PreparedSubset,
    presets,
    epochs: int = 100,
    repetitions: int = 10,
    params: DataParams = DataParams(30, 1, 140),
    seed: int = 0,
    validation_fraction: float = 0.1,
    batch_size: int = 512,
    l1: float | None = None,
    l2: float | None = None,
) -> list[ArchitectureRow]:
    """Train each preset ``repetitions`` times and score it on held-out engines.

    Repetition ``k`` uses the same seeds for every preset, so presets are
    compared on identical data order and initialization streams.
    """
    fit_set, holdout = split_engines(prepared.train, validation_fraction)
    data = build_training_windows(fit_set, params)
    val = build_validation_features(holdout, params, seed=derive_seed(seed, "validation"))
    table = []
    for name in presets:
        layers = with_regularization(preset(name), l1, l2)
        rmses, rhss, diverged, count = [], [], 0, 0
        for rep in range(repetitions):
            model = build_model(data.width, layers, derive_seed(seed, "compare-model", rep))
            count = model.parameter_count
            tc = TrainConfig(epochs=epochs, batch_size=batch_size,
                             shuffle_seed=derive_seed(seed, "compare-shuffle", rep))
            try:
                model, _ = train(model, data, tc)
            except TrainingError as exc:
                log.warning("%s repetition %d diverged: %s", name, rep, exc)
                diverged += 1
                continue
            err = forward(model, val.features) - val.labels
            rmses.append(metrics.rmse(err))
            rhss.append(metrics.rhs(err))
        table.append(ArchitectureRow(
            name, count,
            metrics.Summary.of(rmses) if rmses else None,
            metrics.Summary.of(rhss) if rhss else None,
            repetitions, diverged,
        ))
    return table


def write_architecture_table(table: list[ArchitectureRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["architecture", "parameter_count",
                    "rmse_min", "rmse_max", "rmse_avg", "rmse_std",
                    "rhs_min", "rhs_max", "rhs_avg", "rhs_std", "runs", "diverged"])
        for row in table:
            cells = []
            for s in (row.rmse, row.rhs):
                cells += [format(x, ".17g") for x in (s.min, s.max, s.avg, s.std)] if s else [""] * 4
            w.writerow([row.architecture, row.parameter_count] + cells + [row.runs, row.diverged])


def write_optimization(result: DeResult, path, subset: str) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "subset": subset,
        "best_v": list(result.best_v.as_tuple()),
        "best_score": _num(result.best_score),
        "function_evaluations": result.function_evaluations,
        "unique_evaluations": result.unique_evaluations,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")

