"""Acceptance suite: one test per release criterion, at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line per
criterion. Criterion 5 needs the public household power-consumption dataset
on disk (see scripts/fetch_power_data.py); it skips with instructions when
the file is absent.
"""

import os
import time

import numpy as np
import pytest
from scipy.signal import lfilter

import lstcn
from lstcn.cli import main
from lstcn.model import init_prior, train
from lstcn.preprocessing import (
    SeriesTable,
    impute,
    load_csv,
    make_patches,
    moving_average,
    normalize,
    trim_to_multiple,
    window_matrix,
)
from lstcn.tuning import TuningGrid, evaluate_cell, tune

POWER_REFERENCE_MAE = 0.0531   # reference test error for this dataset
POWER_TOLERANCE = 0.03
POWER_DATA = os.environ.get(
    "LSTCN_POWER_DATA",
    os.path.join(os.path.dirname(__file__), "..", "data",
                 "household_power_consumption.txt"),
)
POWER_FEATURES = [
    "Global_active_power",
    "Global_reactive_power",
    "Voltage",
    "Global_intensity",
]


def sine_table(steps=10_000, seed=123):
    rng = np.random.default_rng(seed)
    t = np.arange(steps)
    values = np.sin(2 * np.pi * t / 350.0) + 0.05 * rng.normal(size=steps)
    return SeriesTable(values=values.reshape(-1, 1), feature_names=["y"])


def tuned_pipeline_test_mae(series, horizon, seed=0):
    """Impute, split 80/20, tune on the default grid, train, score the test tail."""
    series = impute(series)
    cut = int(series.steps * 0.8)
    train_part = normalize(series.slice_steps(0, cut))
    test_part = normalize(series.slice_steps(cut), train_part.scaling)

    best_t, best_lam, _ = tune(train_part, horizon, TuningGrid(seed=seed))

    trimmed = trim_to_multiple(train_part, horizon)
    started = time.perf_counter()
    prior = init_prior(
        make_patches(moving_average(trimmed, 100), horizon, 1),
        best_lam, 0.05, seed=seed,
    )
    model = train(
        make_patches(trimmed, horizon, best_t), *prior, best_lam, seed=seed
    )
    train_seconds = time.perf_counter() - started
    test_windows = window_matrix(trim_to_multiple(test_part, horizon), horizon)
    model_mae = lstcn.mae(
        lstcn.forecast(model, test_windows[:-1]), test_windows[1:]
    )
    return model_mae, best_t, best_lam, train_seconds


def test_criterion_1_solver_matches_brute_force_oracle():
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        phi = rng.normal(size=(50, 6))
        z = rng.normal(size=(50, 4))
        for lam in (0.0, 0.1, 10.0):
            gram = phi.T @ phi
            oracle = np.linalg.inv(gram + lam * np.diag(np.diag(gram))) @ phi.T @ z
            got = lstcn.ridge_solve(phi, z, lam)
            worst = max(worst, float(np.abs(got - oracle).max()))
    elapsed = time.perf_counter() - started
    assert worst <= 1e-8, f"solver deviates from oracle by {worst}"
    assert elapsed < 5.0, f"solver oracle sweep took {elapsed:.2f}s"
    print(f"\ncriterion 1 PASS: max |solver - oracle| = {worst:.2e} "
          f"over 300 solves in {elapsed:.2f}s")


def test_criterion_2_exact_recovery_and_unscale_identity():
    rng = np.random.default_rng(77)
    k, m = 200, 8
    x = rng.uniform(0.05, 0.95, size=(k, m))
    w1 = rng.normal(0, 0.4, (m, m))
    b1 = rng.normal(0, 0.4, (1, m))
    w2_true = rng.normal(0, 0.5, (m, m))
    b2_true = rng.normal(0, 0.5, (1, m))
    h = lstcn.stcn_hidden(x, w1, b1)
    y = lstcn.stcn_output(h, w2_true, b2_true)

    w2, b2 = lstcn.fit_block(x, y, w1, b1, lam=0.0)
    recovery_mae = lstcn.mae(lstcn.stcn_output(h, w2, b2), y)
    assert recovery_mae <= 1e-6, f"recovery MAE {recovery_mae}"

    # unscale identity against an independently standardized solve
    means, stds = h.mean(axis=0), h.std(axis=0)
    stds = np.where(stds < 1e-12, 1.0, stds)
    phi = np.hstack([(h - means) / stds, np.ones((k, 1))])
    gamma = lstcn.ridge_solve(phi, lstcn.logit(y), 0.0)
    identity_gap = np.abs(
        (h @ w2 + b2) - (((h - means) / stds) @ gamma[:m] + gamma[m:])
    ).max()
    assert identity_gap <= 1e-9, f"unscale identity gap {identity_gap}"
    print(f"\ncriterion 2 PASS: recovery MAE {recovery_mae:.2e}, "
          f"unscale identity gap {identity_gap:.2e}")


def test_criterion_3_influence_arithmetic():
    ones = np.ones((4, 4))
    raw = lstcn.influence(ones, 2)
    np.testing.assert_array_equal(raw.scores, [[16.0, 8.0], [8.0, 4.0]])
    normalized = lstcn.normalize_influence(raw)
    np.testing.assert_allclose(normalized.scores.sum(axis=0), 1.0, atol=1e-9)
    temporal = lstcn.influence(ones, 2, mode="temporal")
    np.testing.assert_array_equal(temporal.scores, np.full((2, 2), 4.0))
    print("\ncriterion 3 PASS: modulo scores (16,8;8,4), columns sum to 1, "
          "temporal scores all 4")


def test_criterion_4_sine_tuned_beats_persistence_under_time_budget():
    series = sine_table()
    horizon = 50
    cut = int(series.steps * 0.8)
    train_part = normalize(series.slice_steps(0, cut))
    test_part = normalize(series.slice_steps(cut), train_part.scaling)

    grid_started = time.perf_counter()
    best_t, best_lam, report = tune(train_part, horizon, TuningGrid(seed=5))
    grid_seconds = time.perf_counter() - grid_started
    assert grid_seconds < 60.0, f"default grid took {grid_seconds:.1f}s"

    # single-cell timing at the tuned settings, prior fit included
    trimmed = trim_to_multiple(train_part, horizon)
    windows = window_matrix(trimmed, horizon)
    n_pairs = windows.shape[0] - 1
    n_val = max(1, round(0.2 * n_pairs))
    n_train = n_pairs - n_val
    block = make_patches(
        moving_average(trimmed.slice_steps(0, (n_train + 1) * horizon), 100),
        horizon, 1,
    )
    started = time.perf_counter()
    evaluate_cell(
        block,
        (windows[:n_train], windows[1:n_train + 1]),
        (windows[n_train:-1], windows[n_train + 1:]),
        best_t, best_lam, seed=5, sigma=0.05, features=1, window_len=horizon,
    )
    cell_seconds = time.perf_counter() - started
    assert cell_seconds < 1.0, f"one tuning cell took {cell_seconds:.3f}s"

    # final fit on the whole training segment, scored on the held-out tail
    prior = init_prior(
        make_patches(moving_average(trimmed, 100), horizon, 1),
        best_lam, 0.05, seed=5,
    )
    model = train(
        make_patches(trimmed, horizon, best_t), *prior, best_lam, seed=5
    )
    test_windows = window_matrix(trim_to_multiple(test_part, horizon), horizon)
    x_test, y_test = test_windows[:-1], test_windows[1:]
    model_mae = lstcn.mae(lstcn.forecast(model, x_test), y_test)
    persistence_mae = lstcn.mae(lstcn.persistence_forecast(x_test, 1), y_test)
    assert model_mae < persistence_mae, (
        f"model {model_mae:.4f} vs persistence {persistence_mae:.4f}"
    )
    print(f"\ncriterion 4 PASS: tuned (T={best_t}, lambda={best_lam}) test MAE "
          f"{model_mae:.4f} < persistence {persistence_mae:.4f}; "
          f"one cell in {cell_seconds * 1000:.0f}ms")


@pytest.mark.slow
def test_criterion_5_power_dataset_reproduction():
    if not os.path.exists(POWER_DATA):
        pytest.skip(
            "criterion 5 SKIPPED: household power dataset not found at "
            f"{POWER_DATA}; run scripts/fetch_power_data.py (needs network) "
            "or point LSTCN_POWER_DATA at household_power_consumption.txt"
        )
    series = load_csv(POWER_DATA, POWER_FEATURES, delimiter=";")
    model_mae, best_t, best_lam, train_seconds = tuned_pipeline_test_mae(
        series, horizon=200, seed=0
    )
    assert train_seconds < 60.0, f"training took {train_seconds:.1f}s"
    assert abs(model_mae - POWER_REFERENCE_MAE) <= POWER_TOLERANCE, (
        f"test MAE {model_mae:.4f} not within {POWER_TOLERANCE} of "
        f"{POWER_REFERENCE_MAE}"
    )
    print(f"\ncriterion 5 PASS: power test MAE {model_mae:.4f} "
          f"(reference {POWER_REFERENCE_MAE}, tuned T={best_t}, "
          f"lambda={best_lam}), trained in {train_seconds:.1f}s")


def test_criterion_6_training_error_trend_on_stationary_series():
    wins = 0
    margins = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        shocks = rng.normal(0, 0.3, size=20_000)
        values = lfilter([1.0], [1.0, -0.9], shocks)
        series = normalize(
            SeriesTable(values=values.reshape(-1, 1), feature_names=["y"])
        )
        trimmed = trim_to_multiple(series, 4)
        block = make_patches(moving_average(trimmed, 100), 4, 1)
        prior = init_prior(block, 10.0, 1.0, seed)
        model = train(
            make_patches(trimmed, 4, 4), *prior, 10.0, seed=seed, sigma=1.0
        )
        errors = model.per_patch_training_error
        margins.append(errors[0] - errors[-1])
        if errors[-1] <= errors[0]:
            wins += 1
    assert wins >= 8, f"final <= first in only {wins}/10 runs ({margins})"
    print(f"\ncriterion 6 PASS: final-patch error <= first-patch error in "
          f"{wins}/10 seeded runs")


def test_criterion_7_cmd_train_is_byte_deterministic(tmp_path):
    rng = np.random.default_rng(40)
    steps = 3000
    values = (np.sin(np.arange(steps) / 30.0) * 5.0
              + rng.normal(0, 0.2, steps) + 10.0)
    data = tmp_path / "series.csv"
    with data.open("w") as handle:
        handle.write("y\n")
        handle.writelines(f"{v!r}\n" for v in values.tolist())

    flags = ["--features", "y", "--steps-ahead", "6", "--patches", "3",
             "--lambda", "0.1", "--seed", "11"]
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["train", "--data", str(data), "--model", str(first)] + flags) == 0
    assert main(["train", "--data", str(data), "--model", str(second)] + flags) == 0
    assert first.read_bytes() == second.read_bytes()
    print("\ncriterion 7 PASS: identical configs produce byte-identical "
          "model files")


def test_criterion_8_wall_clock_reported_instead_of_speedup_claims(
    tmp_path, capsys
):
    # Relative speedups versus third-party recurrent stacks are out of scope;
    # the substitute contract is criterion 4's absolute bound plus a wall-clock
    # line in every training summary.
    rng = np.random.default_rng(8)
    data = tmp_path / "series.csv"
    with data.open("w") as handle:
        handle.write("y\n")
        handle.writelines(
            f"{v!r}\n" for v in rng.uniform(0, 1, 400).tolist()
        )
    code = main([
        "train", "--data", str(data), "--model", str(tmp_path / "m.json"),
        "--features", "y", "--steps-ahead", "4", "--patches", "2",
        "--lambda", "0.1", "--seed", "0",
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "training seconds:" in out
    with capsys.disabled():
        print("\ncriterion 8 PASS: training summary reports wall-clock "
              "seconds (speedup tables are out of scope)")


@pytest.mark.slow
def test_reference_targets_reported_when_datasets_present():
    """Steps (0.0212) and Bitcoin (0.0774) are reference targets, not gates.

    They only run when a prepared CSV is supplied by environment variable;
    the achieved MAE is printed alongside the reference number but never
    asserted, because the step-count export sits behind an expiring short
    link and the transaction-graph preprocessing is not fully specified.
    """
    references = [
        ("LSTCN_STEPS_DATA", "Steps", 0.0212, "value", 50),
        ("LSTCN_BITCOIN_DATA", "Bitcoin", 0.0774,
         "length,weight,count,looped,neighbors,income", 200),
    ]
    ran_any = False
    for env_name, label, reference, default_columns, horizon in references:
        path = os.environ.get(env_name)
        if not path:
            continue
        ran_any = True
        columns = os.environ.get(env_name + "_COLUMNS", default_columns)
        series = load_csv(path, [c.strip() for c in columns.split(",")])
        achieved, best_t, best_lam, _ = tuned_pipeline_test_mae(
            series, horizon=horizon, seed=0
        )
        print(f"\n{label}: achieved test MAE {achieved:.4f} "
              f"(reference {reference}, tuned T={best_t}, lambda={best_lam})")
    if not ran_any:
        pytest.skip(
            "reference datasets not provided (set LSTCN_STEPS_DATA / "
            "LSTCN_BITCOIN_DATA to a prepared CSV to report achieved MAE "
            "alongside the reference numbers; these are not acceptance gates)"
        )
