"""Grid search over (patch count, ridge penalty) with a tail holdout."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .metrics import mae
from .model import atomic_write_text, forecast, init_prior, train
from .numerics import SingularMatrixError
from .preprocessing import (
    DataError,
    PatchedDataset,
    SeriesTable,
    make_patches,
    moving_average,
    split_rows,
    trim_to_multiple,
    window_matrix,
)

DEFAULT_PATCH_COUNTS = tuple(range(1, 11))
# Note the deliberate gap at 1e0.
DEFAULT_LAMBDAS = (1e-3, 1e-2, 1e-1, 1e1, 1e2, 1e3)


@dataclass
class TuningGrid:
    patch_counts: tuple[int, ...] = DEFAULT_PATCH_COUNTS
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    seed: int = 0
    validation_fraction: float = 0.2

    def __post_init__(self):
        if not self.patch_counts or not self.lambdas:
            raise ValueError("grid must have at least one patch count and one lambda")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError(
                f"validation fraction must be in (0, 1), got {self.validation_fraction}"
            )


@dataclass
class CellResult:
    patch_count: int
    lam: float
    validation_mae: float | None
    train_seconds: float
    status: str  # "ok" or "skipped"


@dataclass
class TuningReport:
    cells: list[CellResult] = field(default_factory=list)

    def best(self) -> CellResult:
        """Lowest validation MAE; ties prefer fewer patches, then a larger penalty."""
        ok = [c for c in self.cells if c.status == "ok"]
        if not ok:
            raise DataError("every grid cell was skipped; the series is too short")
        return min(ok, key=lambda c: (c.validation_mae, c.patch_count, -c.lam))


def evaluate_cell(
    smoothed_block: PatchedDataset,
    train_pairs: tuple[np.ndarray, np.ndarray],
    val_pairs: tuple[np.ndarray, np.ndarray],
    n_patches: int,
    lam: float,
    *,
    seed: int,
    sigma: float,
    features: int,
    window_len: int,
    prior: tuple[np.ndarray, np.ndarray] | None = None,
) -> float:
    """Train with one (T, lambda) setting and score the held-out tail."""
    w2_0, b2_0 = prior if prior is not None else init_prior(
        smoothed_block, lam, sigma, seed
    )
    dataset = PatchedDataset(
        patches=split_rows(train_pairs[0], train_pairs[1], n_patches),
        window_len=window_len,
        features=features,
    )
    model = train(dataset, w2_0, b2_0, lam, seed=seed, sigma=sigma)
    return mae(forecast(model, val_pairs[0]), val_pairs[1])


def tune(
    series: SeriesTable,
    steps_ahead: int,
    grid: TuningGrid,
    *,
    sigma: float = 0.05,
    window: int = 100,
) -> tuple[int, float, TuningReport]:
    """Grid search on an imputed, normalized training series.

    The series is windowed once; the last ``validation_fraction`` of the
    window pairs is held out (time-ordered tail) and every grid cell is
    trained on the remainder and scored on the holdout. The prior fit sees
    only the steps covered by the training pairs, with the same seed in
    every cell so the penalty is the only thing that varies it.

    Returns (best patch count, best lambda, full report). Cells that cannot
    fill their patch count are marked skipped; if all cells skip, raises.
    """
    trimmed = trim_to_multiple(series, steps_ahead)
    windows = window_matrix(trimmed, steps_ahead)
    n_pairs = windows.shape[0] - 1
    n_val = max(1, round(grid.validation_fraction * n_pairs))
    n_train = n_pairs - n_val
    val_pairs = (windows[n_train:-1], windows[n_train + 1 :])

    smoothed_block = None
    if n_train >= 1:
        # Steps covered by the training pairs: windows 0..n_train inclusive.
        prior_slice = trimmed.slice_steps(0, (n_train + 1) * steps_ahead)
        smoothed = moving_average(prior_slice, min(window, prior_slice.steps))
        smoothed_block = make_patches(smoothed, steps_ahead, 1)
    train_pairs = (windows[:n_train], windows[1 : n_train + 1])

    report = TuningReport()
    # The prior fit depends only on lambda within one search, so cache it.
    priors: dict[float, tuple[np.ndarray, np.ndarray]] = {}
    for n_patches in grid.patch_counts:
        for lam in grid.lambdas:
            if n_train < n_patches:
                report.cells.append(
                    CellResult(n_patches, lam, None, 0.0, "skipped")
                )
                continue
            start = time.perf_counter()
            try:
                if lam not in priors:
                    priors[lam] = init_prior(smoothed_block, lam, sigma, grid.seed)
                score = evaluate_cell(
                    smoothed_block,
                    train_pairs,
                    val_pairs,
                    n_patches,
                    lam,
                    seed=grid.seed,
                    sigma=sigma,
                    features=trimmed.features,
                    window_len=steps_ahead,
                    prior=priors[lam],
                )
            except (SingularMatrixError, DataError):
                report.cells.append(
                    CellResult(
                        n_patches, lam, None, time.perf_counter() - start, "skipped"
                    )
                )
                continue
            report.cells.append(
                CellResult(n_patches, lam, score, time.perf_counter() - start, "ok")
            )
    best = report.best()
    return best.patch_count, best.lam, report


def write_tuning_report(path, report: TuningReport) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["T", "lambda", "validation_mae", "train_seconds", "status"])
    for cell in report.cells:
        writer.writerow(
            [
                cell.patch_count,
                repr(cell.lam),
                "" if cell.validation_mae is None else repr(cell.validation_mae),
                f"{cell.train_seconds:.6f}",
                cell.status,
            ]
        )
    atomic_write_text(path, buffer.getvalue())
