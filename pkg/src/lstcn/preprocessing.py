"""CSV ingestion and the series-to-training-data pipeline.

A raw multivariate series becomes training data in stages: impute missing
values, min-max normalize, trim the head so the length divides the forecast
horizon, cut into consecutive windows, pair each window with the next one,
and split the pairs into time patches. The moving average lives here too
because the prior-knowledge fit consumes a smoothed copy of the series.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import pandas as pd


class DataError(ValueError):
    """Input data violates a pipeline precondition."""


@dataclass
class SeriesTable:
    """A multivariate time series: rows are time steps, columns features.

    ``values`` uses NaN as the missing-value marker. ``scaling`` holds the
    per-feature (min, max) recorded when the series was normalized, and is
    None for raw data. ``timestamps`` are carried along untouched for
    echoing into forecast output.
    """

    values: np.ndarray
    feature_names: list[str]
    scaling: list[tuple[float, float]] | None = None
    timestamps: list[str] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DataError(f"series values must be 2-D, got {self.values.ndim}-D")
        if len(self.feature_names) != self.values.shape[1]:
            raise DataError(
                f"{len(self.feature_names)} feature names for "
                f"{self.values.shape[1]} columns"
            )
        if self.timestamps is not None and len(self.timestamps) != self.values.shape[0]:
            raise DataError("timestamp count does not match step count")

    @property
    def steps(self) -> int:
        return self.values.shape[0]

    @property
    def features(self) -> int:
        return self.values.shape[1]

    def slice_steps(self, start: int, stop: int | None = None) -> "SeriesTable":
        """Row slice that keeps names, scaling and timestamps aligned."""
        ts = self.timestamps[start:stop] if self.timestamps is not None else None
        return replace(self, values=self.values[start:stop], timestamps=ts)


@dataclass
class PatchedDataset:
    """Windowed series pairs split into time-ordered patches.

    Each patch is an (X, Y) pair of K_t x M matrices where every Y row is
    the window that follows the corresponding X row in time, and
    M = features x window_len.
    """

    patches: list[tuple[np.ndarray, np.ndarray]]
    window_len: int
    features: int

    @property
    def columns(self) -> int:
        return self.features * self.window_len

    @property
    def total_rows(self) -> int:
        return sum(x.shape[0] for x, _ in self.patches)

    def all_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Concatenate every patch back into one (X, Y) pair."""
        xs = np.concatenate([x for x, _ in self.patches], axis=0)
        ys = np.concatenate([y for _, y in self.patches], axis=0)
        return xs, ys


def load_csv(
    path,
    feature_columns: list[str],
    delimiter: str = ",",
    timestamp_column: str | None = None,
) -> SeriesTable:
    """Read a headered CSV into a raw SeriesTable.

    Rows must already be in ascending time order. Non-numeric or empty cells
    become NaN missing markers for :func:`impute`; the row itself is kept.
    """
    if not feature_columns:
        raise DataError("no feature columns selected")
    try:
        frame = pd.read_csv(path, sep=delimiter, dtype=str, skipinitialspace=True)
    except FileNotFoundError:
        raise DataError(f"data file not found: {path}") from None
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"could not parse {path}: {exc}") from exc

    wanted = list(feature_columns)
    if timestamp_column is not None:
        wanted.append(timestamp_column)
    missing = [c for c in wanted if c not in frame.columns]
    if missing:
        raise DataError(f"column not found in {path}: {', '.join(missing)}")
    if len(frame) == 0:
        raise DataError(f"no usable rows in {path}")

    columns = [
        pd.to_numeric(frame[c], errors="coerce").to_numpy(dtype=float)
        for c in feature_columns
    ]
    timestamps = None
    if timestamp_column is not None:
        timestamps = frame[timestamp_column].astype(str).tolist()
    return SeriesTable(
        values=np.column_stack(columns),
        feature_names=list(feature_columns),
        timestamps=timestamps,
    )


def impute(series: SeriesTable) -> SeriesTable:
    """Fill NaNs with the nearest observed value of the same feature.

    Distance is the time-index gap; ties go to the earlier neighbour, and
    leading/trailing gaps copy from the single available side.
    """
    values = series.values.copy()
    for j, name in enumerate(series.feature_names):
        col = values[:, j]
        observed = np.flatnonzero(~np.isnan(col))
        if observed.size == 0:
            raise DataError(f"feature '{name}' has no observed values")
        gaps = np.flatnonzero(np.isnan(col))
        if gaps.size == 0:
            continue
        pos = np.searchsorted(observed, gaps)
        left = observed[np.clip(pos - 1, 0, observed.size - 1)]
        right = observed[np.clip(pos, 0, observed.size - 1)]
        # Distance to a neighbour that does not exist on that side is inf.
        dist_left = np.where(pos > 0, gaps - left, np.inf)
        dist_right = np.where(pos < observed.size, right - gaps, np.inf)
        take_left = dist_left <= dist_right
        col[gaps] = np.where(take_left, col[left], col[right])
    return replace(series, values=values)


def normalize(
    series: SeriesTable, scaling: list[tuple[float, float]] | None = None
) -> SeriesTable:
    """Min-max scale each feature into [0, 1].

    Without ``scaling`` the per-feature (min, max) is computed from the
    series itself and recorded for later denormalization. With ``scaling``
    (e.g. the training segment's) the given ranges are applied instead, so
    values may fall outside [0, 1]. Constant features map to 0.5, keeping
    them strictly inside (0, 1).
    """
    if np.any(np.isnan(series.values)):
        raise DataError("series still has missing values; impute first")
    if scaling is None:
        mins = series.values.min(axis=0)
        maxs = series.values.max(axis=0)
        scaling = [(float(lo), float(hi)) for lo, hi in zip(mins, maxs)]
    elif len(scaling) != series.features:
        raise DataError(
            f"{len(scaling)} scaling entries for {series.features} features"
        )
    lo = np.array([s[0] for s in scaling])
    hi = np.array([s[1] for s in scaling])
    span = hi - lo
    if np.any(span < 0):
        raise DataError("scaling max < min")
    safe = np.where(span == 0, 1.0, span)
    scaled = (series.values - lo) / safe
    scaled[:, span == 0] = 0.5
    return replace(series, values=scaled, scaling=list(scaling))


def denormalize(data, scaling: list[tuple[float, float]] | None = None):
    """Map normalized values back to original units, v*(max-min)+min.

    Accepts a SeriesTable (scaling taken from the table unless given) or a
    plain matrix whose columns map to features cyclically, matching the
    time-major window layout where column c holds feature c mod N.
    """
    if isinstance(data, SeriesTable):
        scaling = scaling if scaling is not None else data.scaling
        if scaling is None:
            raise DataError("series has no scaling metadata to invert")
        lo = np.array([s[0] for s in scaling])
        hi = np.array([s[1] for s in scaling])
        restored = data.values * (hi - lo) + lo
        return replace(data, values=restored, scaling=None)
    if scaling is None:
        raise DataError("scaling metadata required to denormalize a matrix")
    matrix = np.asarray(data, dtype=float)
    n = len(scaling)
    lo = np.array([scaling[c % n][0] for c in range(matrix.shape[1])])
    hi = np.array([scaling[c % n][1] for c in range(matrix.shape[1])])
    return matrix * (hi - lo) + lo


def trim_to_multiple(series: SeriesTable, steps_ahead: int) -> SeriesTable:
    """Drop the earliest rows so the step count divides the horizon."""
    if steps_ahead < 1:
        raise DataError(f"steps ahead must be positive, got {steps_ahead}")
    if series.steps < 2 * steps_ahead:
        raise DataError(
            f"series has {series.steps} steps, need at least {2 * steps_ahead} "
            f"to form one input/output pair at horizon {steps_ahead}"
        )
    drop = series.steps % steps_ahead
    return series.slice_steps(drop) if drop else series


def window_matrix(series: SeriesTable, steps_ahead: int) -> np.ndarray:
    """Flatten the series into consecutive non-overlapping windows.

    Returns a Q x M matrix, M = features x steps_ahead, each row one window
    in time-major layout: feature i of lag l sits at column (l-1)*N + i.
    Requires the step count to be a multiple of the horizon.
    """
    if series.steps % steps_ahead != 0:
        raise DataError(
            f"{series.steps} steps is not a multiple of horizon {steps_ahead}; "
            "trim the series first"
        )
    q = series.steps // steps_ahead
    return series.values.reshape(q, steps_ahead * series.features)


def split_rows(
    x: np.ndarray, y: np.ndarray, n_patches: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Cut paired rows into contiguous near-equal patches, in time order.

    When the row count is not divisible, earlier patches take the extra row.
    """
    rows = x.shape[0]
    if n_patches < 1:
        raise DataError(f"patch count must be positive, got {n_patches}")
    if rows < n_patches:
        raise DataError(
            f"{rows} window pairs cannot fill {n_patches} patches; use fewer patches"
        )
    base, extra = divmod(rows, n_patches)
    sizes = [base + 1] * extra + [base] * (n_patches - extra)
    bounds = np.cumsum([0] + sizes)
    return [
        (x[bounds[t] : bounds[t + 1]], y[bounds[t] : bounds[t + 1]])
        for t in range(n_patches)
    ]


def make_patches(
    series: SeriesTable, steps_ahead: int, n_patches: int
) -> PatchedDataset:
    """Window the series and split the (window, next window) pairs into patches."""
    windows = window_matrix(series, steps_ahead)
    if windows.shape[0] < n_patches + 1:
        raise DataError(
            f"only {windows.shape[0] - 1} window pairs at horizon {steps_ahead}; "
            f"cannot form {n_patches} patches, use fewer patches"
        )
    patches = split_rows(windows[:-1], windows[1:], n_patches)
    return PatchedDataset(
        patches=patches, window_len=steps_ahead, features=series.features
    )


def moving_average(series: SeriesTable, window: int) -> SeriesTable:
    """Trailing mean over the last ``window`` steps, per feature.

    The window shrinks at the head of the series (step i averages steps
    max(1, i-window+1)..i) so no future value leaks backwards; output length
    equals input length.
    """
    if window < 1:
        raise DataError(f"window must be positive, got {window}")
    if window > series.steps:
        raise DataError(
            f"window {window} exceeds series length {series.steps}"
        )
    csum = np.cumsum(series.values, axis=0)
    out = np.empty_like(series.values)
    head = min(window, series.steps)
    counts = np.arange(1, head + 1, dtype=float)[:, None]
    out[:head] = csum[:head] / counts
    if series.steps > window:
        out[window:] = (csum[window:] - csum[:-window]) / window
    return replace(series, values=out)
