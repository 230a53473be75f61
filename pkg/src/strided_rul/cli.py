"""Command line entry point: ``strided-rul <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import cmapss, experiment
from .config import ExperimentConfig, apply_overrides, load_config
from .errors import RulError
from .exhaustive import GridSpec, exhaustive_min
from .regressor import PRESETS, load_model, save_model
from .synthetic import SyntheticSpec, write_subset
from .windowing import DataParams

log = logging.getLogger("strided_rul")


def _common(p: argparse.ArgumentParser, *, data=True) -> None:
    p.add_argument("--subset", choices=cmapss.SUBSETS, help="data subset (default FD001)")
    if data:
        p.add_argument("--data-dir", help="directory with train_/test_/RUL_<subset>.txt")
    p.add_argument("--config", help="key = value experiment config file")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="parallel worker processes")
    p.add_argument("-v", "--verbose", action="store_true")


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--reps", type=int, help="training repetitions")
    p.add_argument("--override-v", metavar="NW,NS,RE",
                   help="fixed data parameters instead of optimizing ('published' for the reported ones)")
    p.add_argument("--cap-test-rul", action="store_true", help="clip test RUL labels at R_e")
    p.add_argument("--reoptimize", action="store_true",
                   help="search FD003/FD004 parameters on their own data")
    p.add_argument("--epochs", type=int, help="final training epochs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strided-rul", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", help="write a synthetic subset in C-MAPSS format")
    _common(p, data=False)
    p.add_argument("--engines", type=int, default=SyntheticSpec.n_train)
    p.add_argument("--test-engines", type=int, default=SyntheticSpec.n_test)
    p.add_argument("--min-life", type=int, default=SyntheticSpec.min_life)
    p.add_argument("--max-life", type=int, default=SyntheticSpec.max_life)

    p = sub.add_parser("ingest-check", help="parse a subset and summarize it")
    _common(p)

    p = sub.add_parser("optimize", help="differential-evolution search of the data parameters")
    _common(p)
    p.add_argument("--reoptimize", action="store_true")

    p = sub.add_parser("run", help="full pipeline: optimize, train, evaluate, report")
    _common(p)
    _experiment_flags(p)

    p = sub.add_parser("train", help="train one model with fixed data parameters")
    _common(p)
    _experiment_flags(p)

    p = sub.add_parser("evaluate", help="score a saved model on the test set")
    _common(p)
    p.add_argument("--model", required=True, help="model file written by 'train'")
    p.add_argument("--override-v", metavar="NW,NS,RE", required=True)
    p.add_argument("--cap-test-rul", action="store_true")

    p = sub.add_parser("exhaustive", help="score every point of the parameter grid")
    _common(p)
    p.add_argument("--long-running", action="store_true",
                   help="full grid (R_e step 1); otherwise a coarse R_e step")
    p.add_argument("--re-step", type=int, help="explicit R_e step")

    p = sub.add_parser("compare-arch", help="compare the preset architectures")
    _common(p)
    p.add_argument("--archs", default=",".join(PRESETS), help="comma separated preset names")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--override-v", metavar="NW,NS,RE", default="30,1,140")
    return parser


def resolve_config(args) -> ExperimentConfig:
    config = ExperimentConfig()
    if getattr(args, "config", None):
        config = load_config(args.config, config)
    items = {}
    for flag, key in (("subset", "subset"), ("data_dir", "data_dir"), ("seed", "seed"),
                      ("out", "out"), ("workers", "workers"), ("reps", "repetitions"),
                      ("override_v", "params"), ("epochs", "train.epochs")):
        value = getattr(args, flag, None)
        if value is not None:
            items[key] = str(value)
    for flag in ("cap_test_rul", "reoptimize"):
        if getattr(args, flag, False):
            items[flag] = "true"
    return apply_overrides(config, items)


def _out(config: ExperimentConfig) -> Path:
    p = Path(config.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_synth_data(args) -> int:
    spec = SyntheticSpec(
        n_train=args.engines, n_test=args.test_engines, min_life=args.min_life,
        max_life=args.max_life, seed=args.seed or 0,
    )
    paths = write_subset(args.out or "data", args.subset or "FD001", spec)
    for path in paths.values():
        print(path)
    return 0


def cmd_ingest_check(args) -> int:
    config = resolve_config(args)
    train, test = cmapss.load_subset(config.data_dir, config.subset)
    expected = cmapss.TRAJECTORY_COUNTS[config.subset]
    prepared = cmapss.prepare(train, test)
    summary = {
        "subset": config.subset,
        "train_engines": len(train),
        "test_engines": len(test),
        "published_counts": {"train": expected[0], "test": expected[1]},
        "matches_published_counts": (len(train), len(test)) == expected,
        "train_rows": int(train.lengths.sum()),
        "test_rows": int(test.lengths.sum()),
        "train_length_range": [int(train.lengths.min()), int(train.lengths.max())],
        "test_length_range": [int(test.lengths.min()), int(test.lengths.max())],
        "selected_sensors": list(cmapss.SELECTED_SENSORS),
        "constant_sensors": [s for s, span in zip(prepared.stats.sensor_ids, prepared.stats.span)
                             if span == 0],
    }
    print(json.dumps(summary, indent=2))
    return 0


def cmd_optimize(args) -> int:
    config = resolve_config(args)
    out = _out(config)
    source = experiment.optimization_subset(config)
    prepared = cmapss.load_prepared(config.data_dir, source)
    result = experiment.run_optimization(prepared, config, out / experiment.TRACE_FILE)
    experiment.write_optimization(result, out / "optimize.json", source)
    print(f"best v = {result.best_v.as_tuple()}  rmse = {result.best_score:.4f}  "
          f"evaluations = {result.function_evaluations} ({result.unique_evaluations} unique)")
    return 0


def cmd_run(args) -> int:
    report = experiment.run_experiment(resolve_config(args))
    agg = report.aggregate()
    print(f"{report.subset} v = {report.params.as_tuple()}  "
          f"RMSE avg {agg['rmse']['avg']:.3f} (min {agg['rmse']['min']:.3f}, max {agg['rmse']['max']:.3f})  "
          f"RHS avg {agg['rhs']['avg']:.3f}")
    return 0


def cmd_train(args) -> int:
    config = resolve_config(args)
    params = config.fixed_params()
    if params is None:
        raise SystemExit("train needs --override-v (or params in the config); use 'run' to optimize")
    out = _out(config)
    prepared = cmapss.load_prepared(config.data_dir, config.subset)
    model, history, data = experiment.train_final(prepared, params, config, rep=0)
    save_model(model, out / experiment.MODEL_FILE)
    print(f"trained {model!r} on {len(data)} windows; final loss {history.train_loss[-1]:.4f}")
    return 0


def cmd_evaluate(args) -> int:
    config = resolve_config(args)
    params = DataParams.parse(args.override_v)
    out = _out(config)
    prepared = cmapss.load_prepared(config.data_dir, config.subset)
    model = load_model(args.model)
    test, pred, err = experiment.evaluate_model(model, prepared, params, config.cap_test_rul)
    report = experiment.EvalReport(
        subset=config.subset, params=params, input_width=model.input_width,
        architecture="file:" + Path(args.model).name, parameter_count=model.parameter_count,
        repetitions=[{"index": 0, "rmse": experiment.metrics.rmse(err),
                      "rhs": experiment.metrics.rhs(err)}],
        per_engine=[{"engine_id": int(e), "true_rul": int(t), "predicted_rul": float(p),
                     "error": float(p - t)} for e, t, p in zip(test.engine_ids, test.labels, pred)],
        best_repetition=0,
        quartiles=experiment.metrics.error_quartiles(abs(err)),
        padded_test_engines=list(test.padded_engines),
    )
    (out / experiment.REPORT_FILE).write_text(report.to_json(), encoding="utf-8")
    experiment.write_per_engine(report, out / experiment.PER_ENGINE_FILE)
    experiment.emit_figure_data(report, out)
    print(f"RMSE {report.rmse_values[0]:.4f}  RHS {report.rhs_values[0]:.4f}")
    return 0


def cmd_exhaustive(args) -> int:
    config = resolve_config(args)
    out = _out(config)
    grid = GridSpec.for_subset(config.subset, coarse=not args.long_running)
    if args.re_step:
        grid = replace(grid, r_e_step=args.re_step)
    prepared = cmapss.load_prepared(config.data_dir, config.subset)
    fitness = experiment.make_fitness(prepared, replace(config, reoptimize=True))
    log.info("scoring %d grid points", grid.cardinality)
    result = exhaustive_min(fitness.evaluate, grid, workers=config.workers,
                            table_path=out / "grid_scores.csv")
    summary = {
        "subset": config.subset,
        "grid_points": grid.cardinality,
        "r_e_step": grid.r_e_step,
        "argmin": list(result.argmin.as_tuple()) if result.argmin else None,
        "min_rmse": result.min_score,
        "argmax": list(result.argmax.as_tuple()) if result.argmax else None,
        "max_rmse": result.max_score,
    }
    (out / "exhaustive.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(summary))
    return 0


def cmd_compare_arch(args) -> int:
    config = resolve_config(args)
    out = _out(config)
    prepared = cmapss.load_prepared(config.data_dir, config.subset)
    names = [n.strip() for n in args.archs.split(",") if n.strip()]
    table = experiment.compare_architectures(
        prepared, names, epochs=args.epochs, repetitions=args.reps,
        params=DataParams.parse(args.override_v), seed=config.seed,
        l1=config.l1, l2=config.l2,
    )
    experiment.write_architecture_table(table, out / "architectures.csv")
    for row in table:
        avg = f"{row.rmse.avg:.3f}" if row.rmse else "n/a"
        print(f"{row.architecture}: params {row.parameter_count}  RMSE avg {avg}  diverged {row.diverged}")
    return 0


COMMANDS = {
    "synth-data": cmd_synth_data,
    "ingest-check": cmd_ingest_check,
    "optimize": cmd_optimize,
    "run": cmd_run,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "exhaustive": cmd_exhaustive,
    "compare-arch": cmd_compare_arch,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (RulError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
