"""Feature influence scores and weight-distribution exports.

The influence of feature i on feature j is the sum of absolute weights over
a pair of neuron index sets. Two index-set conventions are supported:

* ``modulo`` (default): set i holds every 1-based position divisible by i.
* ``temporal``: set i holds feature i's position inside each lag block,
  (l-1)*N + i for l = 1..L, matching the time-major window layout.

The modulo rule makes set 1 cover every neuron, so its scores are not
comparable across features in the way the temporal rule's are; both are
cheap, so callers pick.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .model import LstcnModel, atomic_write_text
from .numerics import ShapeError

INDEX_MODES = ("modulo", "temporal")
WEIGHT_SOURCES = ("w1", "w2", "average")


@dataclass
class InfluenceMatrix:
    """N x N nonnegative scores; entry (i, j) is feature i's effect on j."""

    scores: np.ndarray
    source: str
    normalized: bool
    mode: str = "modulo"


def index_set(i: int, width: int, *, mode: str = "modulo", features: int = 0) -> set[int]:
    """1-based neuron positions attributed to feature i in an M-wide block."""
    if mode == "modulo":
        if i < 1:
            raise ValueError(f"feature index must be >= 1, got {i}")
        return {p for p in range(1, width + 1) if p % i == 0}
    if mode == "temporal":
        if not 1 <= i <= features:
            raise ValueError(f"feature index {i} outside 1..{features}")
        if features < 1 or width % features != 0:
            raise ShapeError(f"width {width} is not a multiple of {features} features")
        return {lag * features + i for lag in range(width // features)}
    raise ValueError(f"unknown index mode '{mode}', expected one of {INDEX_MODES}")


def influence(
    weights: np.ndarray, n_features: int, mode: str = "modulo"
) -> InfluenceMatrix:
    """Raw pairwise influence scores from one M x M weight matrix."""
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
        raise ShapeError(f"weight matrix must be square, got {weights.shape}")
    width = weights.shape[0]
    if n_features < 1 or width % n_features != 0:
        raise ShapeError(
            f"matrix width {width} is not a multiple of {n_features} features"
        )
    magnitude = np.abs(weights)
    sets = [
        np.array(sorted(index_set(i, width, mode=mode, features=n_features))) - 1
        for i in range(1, n_features + 1)
    ]
    scores = np.empty((n_features, n_features))
    for i, rows in enumerate(sets):
        for j, cols in enumerate(sets):
            scores[i, j] = magnitude[np.ix_(rows, cols)].sum()
    return InfluenceMatrix(scores=scores, source="w2", normalized=False, mode=mode)


def normalize_influence(raw: InfluenceMatrix) -> InfluenceMatrix:
    """Scale each column to sum to one; all-zero columns become uniform."""
    scores = np.asarray(raw.scores, dtype=float)
    if np.any(scores < 0):
        raise ValueError("influence scores must be nonnegative")
    totals = scores.sum(axis=0)
    n = scores.shape[0]
    normalized = np.where(totals == 0, 1.0 / n, scores / np.where(totals == 0, 1.0, totals))
    return InfluenceMatrix(
        scores=normalized, source=raw.source, normalized=True, mode=raw.mode
    )


def combined_weights(model: LstcnModel, source: str) -> np.ndarray:
    """Pick the weight matrix influence is computed from."""
    if source == "w1":
        return model.weights.w1
    if source == "w2":
        return model.weights.w2
    if source == "average":
        return (model.weights.w1 + model.weights.w2) / 2.0
    raise ValueError(f"unknown source '{source}', expected one of {WEIGHT_SOURCES}")


def model_influence(
    model: LstcnModel, source: str, mode: str = "modulo"
) -> InfluenceMatrix:
    """Raw influence scores for a trained model's chosen weight matrix."""
    result = influence(combined_weights(model, source), model.n_features, mode)
    result.source = source
    return result


def weight_histogram(
    matrix: np.ndarray, bins: int
) -> list[tuple[float, float, int]]:
    """Equal-width bin counts over [min, max] of all matrix entries."""
    if bins < 1:
        raise ValueError(f"bin count must be positive, got {bins}")
    counts, edges = np.histogram(np.asarray(matrix, dtype=float).ravel(), bins=bins)
    return [
        (float(edges[k]), float(edges[k + 1]), int(counts[k]))
        for k in range(len(counts))
    ]


def write_influence_csv(path, infl: InfluenceMatrix, feature_names: list[str]) -> None:
    """Write scores with a feature-name header row and column."""
    if len(feature_names) != infl.scores.shape[0]:
        raise ShapeError(
            f"{len(feature_names)} names for {infl.scores.shape[0]} features"
        )
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["feature"] + list(feature_names))
    for name, row in zip(feature_names, infl.scores):
        writer.writerow([name] + [repr(float(v)) for v in row])
    atomic_write_text(path, buffer.getvalue())


def write_histogram_csv(path, histogram: list[tuple[float, float, int]]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["bin_lower", "bin_upper", "count"])
    for lower, upper, count in histogram:
        writer.writerow([repr(lower), repr(upper), count])
    atomic_write_text(path, buffer.getvalue())
