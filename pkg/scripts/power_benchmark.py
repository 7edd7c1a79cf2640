#!/usr/bin/env python3
"""Benchmark on the household power-consumption dataset.

Runs the full recipe on the real data: nearest-neighbour imputation, min-max
normalization fitted on the leading 80%, default-grid search over the patch
count and penalty at a 200-step horizon, final training, and test MAE against
the persistence baseline. The reference test MAE for this setup is 0.0531.

Fetch the data first with scripts/fetch_power_data.py (or set
LSTCN_POWER_DATA).
"""

import argparse
import os
import sys
import time

from lstcn.metrics import mae, persistence_forecast
from lstcn.model import forecast, init_prior, train
from lstcn.preprocessing import (
    impute,
    load_csv,
    make_patches,
    moving_average,
    normalize,
    trim_to_multiple,
    window_matrix,
)
from lstcn.tuning import TuningGrid, tune, write_tuning_report

FEATURES = [
    "Global_active_power",
    "Global_reactive_power",
    "Voltage",
    "Global_intensity",
]
REFERENCE_TEST_MAE = 0.0531


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--data",
        default=os.environ.get(
            "LSTCN_POWER_DATA", "data/household_power_consumption.txt"
        ),
    )
    parser.add_argument("--steps-ahead", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--report", default="power_tuning_report.csv")
    args = parser.parse_args()

    if not os.path.exists(args.data):
        print(f"dataset not found at {args.data}; run "
              "scripts/fetch_power_data.py first", file=sys.stderr)
        return 1

    horizon = args.steps_ahead
    print(f"loading {args.data} ...")
    series = impute(load_csv(args.data, FEATURES, delimiter=";"))
    print(f"{series.steps} steps x {series.features} features")

    cut = int(series.steps * 0.8)
    train_part = normalize(series.slice_steps(0, cut))
    test_part = normalize(series.slice_steps(cut), train_part.scaling)

    started = time.perf_counter()
    best_t, best_lam, report = tune(
        train_part, horizon, TuningGrid(seed=args.seed)
    )
    print(f"grid search: {time.perf_counter() - started:.1f}s, "
          f"best T={best_t} lambda={best_lam}")
    write_tuning_report(args.report, report)

    trimmed = trim_to_multiple(train_part, horizon)
    started = time.perf_counter()
    prior = init_prior(
        make_patches(moving_average(trimmed, 100), horizon, 1),
        best_lam, 0.05, seed=args.seed,
    )
    model = train(
        make_patches(trimmed, horizon, best_t), *prior, best_lam,
        seed=args.seed,
    )
    train_seconds = time.perf_counter() - started
    for t, err in enumerate(model.per_patch_training_error, start=1):
        print(f"patch {t}/{model.patches} training mae: {err:.4f}")
    print(f"training seconds: {train_seconds:.2f}")

    test_windows = window_matrix(trim_to_multiple(test_part, horizon), horizon)
    x_test, y_test = test_windows[:-1], test_windows[1:]
    model_mae = mae(forecast(model, x_test), y_test)
    baseline = mae(persistence_forecast(x_test, len(FEATURES)), y_test)
    print(f"test mae: {model_mae:.4f} (reference "
          f"{REFERENCE_TEST_MAE}), persistence baseline {baseline:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
