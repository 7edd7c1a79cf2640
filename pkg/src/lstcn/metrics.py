"""Forecast error metrics and the naive persistence baseline."""

from __future__ import annotations

import numpy as np

from .numerics import ShapeError


def mae(predicted: np.ndarray, actual: np.ndarray) -> float:
    """Mean absolute error over all entries of two equal-shape matrices."""
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if predicted.shape != actual.shape:
        raise ShapeError(
            f"predicted shape {predicted.shape} != actual shape {actual.shape}"
        )
    if predicted.size == 0:
        raise ValueError("cannot compute MAE of empty matrices")
    return float(np.mean(np.abs(predicted - actual)))


def persistence_forecast(x: np.ndarray, n_features: int) -> np.ndarray:
    """Naive forecast repeating each window's last observed step.

    Inputs are flattened windows in time-major layout (all features of the
    earliest step first), so the last step occupies the final n_features
    columns; the forecast tiles it across all steps ahead.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or n_features < 1 or x.shape[1] % n_features != 0:
        raise ShapeError(
            f"window matrix has {x.shape[1] if x.ndim == 2 else '?'} columns, "
            f"not a multiple of {n_features} features"
        )
    last_step = x[:, -n_features:]
    steps_ahead = x.shape[1] // n_features
    return np.tile(last_step, (1, steps_ahead))
