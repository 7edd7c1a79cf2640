"""Command-line surface: train, tune, forecast, eval, explain.

Every command is deterministic given its flags (including --seed), writes
its artifacts atomically, and reports failures as ``error [stage]: ...`` on
stderr with a nonzero exit code. A key = value config file can supply any
flag; explicit command-line flags take precedence.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass

from .interpret import (
    INDEX_MODES,
    WEIGHT_SOURCES,
    model_influence,
    normalize_influence,
    weight_histogram,
    write_histogram_csv,
    write_influence_csv,
)
from .metrics import mae, persistence_forecast
from .model import (
    LstcnModel,
    ModelFormatError,
    atomic_write_text,
    forecast,
    init_prior,
    load_model,
    load_prior,
    save_model,
    train,
)
from .numerics import ShapeError, SingularMatrixError
from .preprocessing import (
    DataError,
    SeriesTable,
    impute,
    load_csv,
    make_patches,
    moving_average,
    normalize,
    denormalize,
    trim_to_multiple,
    window_matrix,
)
from .tuning import (
    DEFAULT_LAMBDAS,
    DEFAULT_PATCH_COUNTS,
    TuningGrid,
    tune,
    write_tuning_report,
)


class PipelineError(Exception):
    """A pipeline step failed; carries the stage name for the error report."""

    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


@contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineError:
        raise
    except (DataError, ShapeError, SingularMatrixError, ModelFormatError,
            ValueError, OSError) as exc:
        raise PipelineError(name, str(exc)) from exc


def _require(args: argparse.Namespace, command: str, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join(
            "--lambda" if n == "lam" else "--" + n.replace("_", "-")
            for n in missing
        )
        raise PipelineError("config", f"{command} requires {flags}")


def _split_features(raw: str) -> list[str]:
    names = [part.strip() for part in raw.split(",") if part.strip()]
    if not names:
        raise PipelineError("config", "no feature columns given")
    return names


def _time_split(series: SeriesTable, train_fraction: float) -> tuple[SeriesTable, SeriesTable]:
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train fraction must be in (0, 1), got {train_fraction}")
    cut = int(series.steps * train_fraction)
    return series.slice_steps(0, cut), series.slice_steps(cut)


def _named_scaling(series: SeriesTable) -> list[tuple[str, float, float]]:
    return [
        (name, lo, hi)
        for name, (lo, hi) in zip(series.feature_names, series.scaling)
    ]


# ---------------------------------------------------------------------------
# train

def cmd_train(args: argparse.Namespace) -> int:
    _require(args, "train", "data", "features", "steps_ahead", "patches", "lam", "model")
    features = _split_features(args.features)
    horizon = args.steps_ahead

    with _stage("load"):
        series = load_csv(args.data, features, args.delimiter, args.timestamp_column)
    with _stage("impute"):
        series = impute(series)
    with _stage("split"):
        train_part, _ = _time_split(series, args.train_fraction)
    with _stage("normalize"):
        train_part = normalize(train_part)
    with _stage("trim"):
        trimmed = trim_to_multiple(train_part, horizon)

    if args.prior:
        with _stage("prior"):
            w2_0, b2_0 = load_prior(args.prior)
            width = trimmed.features * horizon
            if w2_0.shape[0] != width:
                raise DataError(
                    f"prior width {w2_0.shape[0]} does not match block width {width}"
                )
    else:
        with _stage("smooth"):
            smoothed = moving_average(trimmed, args.window)
        with _stage("prior"):
            block = make_patches(smoothed, horizon, 1)
            w2_0, b2_0 = init_prior(block, args.lam, args.sigma, args.seed)

    with _stage("patch"):
        dataset = make_patches(trimmed, horizon, args.patches)
    with _stage("train"):
        started = time.perf_counter()
        model = train(
            dataset, w2_0, b2_0, args.lam,
            scaling=_named_scaling(trimmed),
            seed=args.seed, sigma=args.sigma, window=args.window,
        )
        seconds = time.perf_counter() - started
    with _stage("save"):
        save_model(model, args.model)

    for t, err in enumerate(model.per_patch_training_error, start=1):
        print(f"patch {t}/{model.patches} training mae: {err:.6f}")
    print(f"training seconds: {seconds:.4f}")
    print(f"model written: {args.model}")
    return 0


# ---------------------------------------------------------------------------
# tune

def _parse_int_grid(raw: str) -> tuple[int, ...]:
    return tuple(int(p) for p in raw.split(",") if p.strip())


def _parse_float_grid(raw: str) -> tuple[float, ...]:
    return tuple(float(p) for p in raw.split(",") if p.strip())


def cmd_tune(args: argparse.Namespace) -> int:
    _require(args, "tune", "data", "features", "steps_ahead", "report")
    features = _split_features(args.features)

    with _stage("config"):
        grid = TuningGrid(
            patch_counts=_parse_int_grid(args.patch_grid)
            if args.patch_grid else DEFAULT_PATCH_COUNTS,
            lambdas=_parse_float_grid(args.lambda_grid)
            if args.lambda_grid else DEFAULT_LAMBDAS,
            seed=args.seed,
            validation_fraction=args.validation_fraction,
        )
    with _stage("load"):
        series = load_csv(args.data, features, args.delimiter, args.timestamp_column)
    with _stage("impute"):
        series = impute(series)
    with _stage("split"):
        train_part, _ = _time_split(series, args.train_fraction)
    with _stage("normalize"):
        train_part = normalize(train_part)
    with _stage("tune"):
        best_t, best_lam, report = tune(
            train_part, args.steps_ahead, grid,
            sigma=args.sigma, window=args.window,
        )
    with _stage("save"):
        write_tuning_report(args.report, report)

    skipped = sum(1 for c in report.cells if c.status == "skipped")
    print(f"grid cells evaluated: {len(report.cells) - skipped} "
          f"(skipped: {skipped})")
    print(f"best patches: {best_t}")
    print(f"best lambda: {best_lam}")
    print(f"report written: {args.report}")
    return 0


# ---------------------------------------------------------------------------
# forecast

def _forecast_header(model: LstcnModel, with_timestamp: bool) -> list[str]:
    names = []
    if with_timestamp:
        names.append("timestamp")
    for lag in range(1, model.steps_ahead + 1):
        for feat in model.feature_names:
            names.append(f"lag{lag}_{feat}")
    return names


def _write_forecast_csv(path, model, matrix, timestamps) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(_forecast_header(model, timestamps is not None))
    for k, row in enumerate(matrix):
        cells = [timestamps[k]] if timestamps is not None else []
        writer.writerow(cells + [repr(float(v)) for v in row])
    atomic_write_text(path, buffer.getvalue())


def cmd_forecast(args: argparse.Namespace) -> int:
    _require(args, "forecast", "model", "data", "out")
    with _stage("model"):
        model = load_model(args.model)
    with _stage("load"):
        series = load_csv(
            args.data, model.feature_names, args.delimiter, args.timestamp_column
        )
    with _stage("impute"):
        series = impute(series)
    with _stage("normalize"):
        series = normalize(series, model.feature_scaling)
    with _stage("trim"):
        horizon = model.steps_ahead
        if series.steps < horizon:
            raise DataError(
                f"{series.steps} steps cannot fill one window of {horizon}"
            )
        series = series.slice_steps(series.steps % horizon)
    with _stage("forecast"):
        windows = window_matrix(series, horizon)
        predicted_norm = forecast(model, windows)
        predicted = denormalize(predicted_norm, model.feature_scaling)
        stamps = None
        if series.timestamps is not None:
            stamps = [
                series.timestamps[(k + 1) * horizon - 1]
                for k in range(windows.shape[0])
            ]
    with _stage("save"):
        _write_forecast_csv(args.out, model, predicted, stamps)
        if args.normalized_out:
            _write_forecast_csv(args.normalized_out, model, predicted_norm, stamps)

    print(f"forecasts written: {args.out} ({windows.shape[0]} windows)")
    if args.normalized_out:
        print(f"normalized forecasts written: {args.normalized_out}")
    return 0


# ---------------------------------------------------------------------------
# eval

@dataclass
class EvalReport:
    train_mae: float
    last_patch_train_mae: float
    stored_last_patch_error: float
    test_mae: float
    persistence_test_mae: float


def evaluate_model(
    model: LstcnModel, series: SeriesTable, train_fraction: float
) -> EvalReport:
    """Score a model on the same split/normalize/trim pipeline it was trained with."""
    series = impute(series)
    train_part, test_part = _time_split(series, train_fraction)
    train_part = normalize(train_part, model.feature_scaling)
    test_part = normalize(test_part, model.feature_scaling)

    horizon = model.steps_ahead
    trimmed = trim_to_multiple(train_part, horizon)
    dataset = make_patches(trimmed, horizon, model.patches)
    x_all, y_all = dataset.all_pairs()
    train_mae = mae(forecast(model, x_all), y_all)
    x_last, y_last = dataset.patches[-1]
    last_patch_mae = mae(forecast(model, x_last), y_last)

    test_trimmed = trim_to_multiple(test_part, horizon)
    test_windows = window_matrix(test_trimmed, horizon)
    x_test, y_test = test_windows[:-1], test_windows[1:]
    test_mae = mae(forecast(model, x_test), y_test)
    persistence_mae = mae(persistence_forecast(x_test, model.n_features), y_test)

    stored = (
        model.per_patch_training_error[-1]
        if model.per_patch_training_error else float("nan")
    )
    return EvalReport(
        train_mae=train_mae,
        last_patch_train_mae=last_patch_mae,
        stored_last_patch_error=stored,
        test_mae=test_mae,
        persistence_test_mae=persistence_mae,
    )


def cmd_eval(args: argparse.Namespace) -> int:
    _require(args, "eval", "model", "data")
    with _stage("model"):
        model = load_model(args.model)
    with _stage("load"):
        series = load_csv(args.data, model.feature_names, args.delimiter)
    with _stage("eval"):
        report = evaluate_model(model, series, args.train_fraction)

    print(f"train mae: {report.train_mae:.6f}")
    print(f"last patch train mae: {report.last_patch_train_mae:.6f} "
          f"(stored: {report.stored_last_patch_error:.6f})")
    print(f"test mae: {report.test_mae:.6f}")
    print(f"persistence test mae: {report.persistence_test_mae:.6f}")
    return 0


# ---------------------------------------------------------------------------
# explain

def cmd_explain(args: argparse.Namespace) -> int:
    _require(args, "explain", "model", "out_dir")
    with _stage("model"):
        model = load_model(args.model)
    with _stage("explain"):
        raw = model_influence(model, args.source, args.index_mode)
        normalized = normalize_influence(raw)
        w1_hist = weight_histogram(model.weights.w1, args.bins)
        w2_hist = weight_histogram(model.weights.w2, args.bins)
    with _stage("save"):
        os.makedirs(args.out_dir, exist_ok=True)
        paths = {
            "influence_raw": os.path.join(args.out_dir, "influence_raw.csv"),
            "influence_normalized": os.path.join(
                args.out_dir, "influence_normalized.csv"
            ),
            "hist_w1": os.path.join(args.out_dir, "hist_w1.csv"),
            "hist_w2": os.path.join(args.out_dir, "hist_w2.csv"),
        }
        write_influence_csv(paths["influence_raw"], raw, model.feature_names)
        write_influence_csv(
            paths["influence_normalized"], normalized, model.feature_names
        )
        write_histogram_csv(paths["hist_w1"], w1_hist)
        write_histogram_csv(paths["hist_w2"], w2_hist)

    for label, path in paths.items():
        print(f"{label} written: {path}")
    return 0


# ---------------------------------------------------------------------------
# parser assembly and config file merging

def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, set[str]]]:
    parser = argparse.ArgumentParser(
        prog="lstcn",
        description="Train, tune, run and explain chained cognitive-block forecasters.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    known: dict[str, set[str]] = {}

    def register(sub, *names, **kwargs):
        sub.add_argument(*names, **kwargs)
        known[sub.prog.split()[-1]].update(n for n in names if n.startswith("--"))

    def new_command(name, help_text, func):
        sub = subs.add_parser(name, help=help_text)
        sub.set_defaults(func=func)
        known[name] = set()
        register(sub, "--config", help="key = value file supplying defaults for any flag")
        return sub

    def data_options(sub):
        register(sub, "--data", help="CSV file of time steps in ascending order")
        register(sub, "--delimiter", default=",", help="CSV delimiter (default ,)")
        register(sub, "--timestamp-column",
                 help="column echoed into forecast output, ignored for math")

    def training_options(sub):
        register(sub, "--features",
                 help="comma-separated feature column names, in order")
        register(sub, "--steps-ahead", type=int, help="forecast horizon L")
        register(sub, "--lambda", dest="lam", type=float, help="ridge penalty")
        register(sub, "--seed", type=int, default=0, help="prior noise seed")
        register(sub, "--sigma", type=float, default=0.05,
                 help="prior noise standard deviation (default 0.05)")
        register(sub, "--window", type=int, default=100,
                 help="moving-average window for the prior fit (default 100)")
        register(sub, "--train-fraction", type=float, default=0.8,
                 help="leading fraction of steps used for training (default 0.8)")

    sub = new_command("train", "fit a model and write it to disk", cmd_train)
    data_options(sub)
    training_options(sub)
    register(sub, "--patches", type=int, help="number of time patches T")
    register(sub, "--prior",
             help="JSON file with w2/b2 matrices to use instead of the smoothed fit")
    register(sub, "--model", help="output model path")

    sub = new_command("tune", "grid-search patch count and penalty", cmd_tune)
    data_options(sub)
    training_options(sub)
    register(sub, "--patch-grid", help="comma-separated patch counts (default 1..10)")
    register(sub, "--lambda-grid",
             help="comma-separated penalties (default 1e-3,1e-2,1e-1,1e1,1e2,1e3)")
    register(sub, "--validation-fraction", type=float, default=0.2,
             help="tail fraction of window pairs held out (default 0.2)")
    register(sub, "--report", help="output CSV path for the full grid report")

    sub = new_command("forecast", "write next-window forecasts for a data file",
                      cmd_forecast)
    data_options(sub)
    register(sub, "--model", help="trained model path")
    register(sub, "--out", help="output CSV path (original units)")
    register(sub, "--normalized-out", help="also write forecasts on the [0,1] scale")

    sub = new_command("eval", "report train/test MAE against the persistence baseline",
                      cmd_eval)
    data_options(sub)
    register(sub, "--model", help="trained model path")
    register(sub, "--train-fraction", type=float, default=0.8,
             help="split used at training time (default 0.8)")

    sub = new_command("explain", "export influence scores and weight histograms",
                      cmd_explain)
    register(sub, "--model", help="trained model path")
    register(sub, "--source", choices=WEIGHT_SOURCES, default="average",
             help="weight matrix the scores come from (default average)")
    register(sub, "--index-mode", choices=INDEX_MODES, default="modulo",
             help="neuron index-set convention (default modulo)")
    register(sub, "--bins", type=int, default=30,
             help="histogram bin count (default 30)")
    register(sub, "--out-dir", help="directory for the exported CSV files")

    return parser, known


def _read_config(path: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    try:
        with open(path) as handle:
            for lineno, line in enumerate(handle, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                if "=" not in stripped:
                    raise PipelineError(
                        "config", f"{path}:{lineno}: expected key = value"
                    )
                key, value = stripped.split("=", 1)
                entries[key.strip().replace("_", "-")] = value.strip()
    except OSError as exc:
        raise PipelineError("config", f"cannot read config file: {exc}") from exc
    return entries


def _merge_config(argv: list[str], command: str, config_path: str,
                  known: set[str]) -> list[str]:
    """Re-order argv so config-file values precede (lose to) explicit flags."""
    flags: list[str] = []
    for key, value in _read_config(config_path).items():
        flag = "--" + key
        if flag in known and flag != "--config":
            flags.extend([flag, value])
    at = argv.index(command)
    return argv[: at + 1] + flags + argv[at + 1 :]


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, known = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            args = parser.parse_args(
                _merge_config(list(argv), args.command, args.config,
                              known[args.command])
            )
        return args.func(args)
    except PipelineError as exc:
        print(f"error [{exc.stage}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
