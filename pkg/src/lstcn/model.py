"""Two-layer block reasoning, chained closed-form training, persistence.

A block holds four matrices: (w1, b1) carry prior knowledge forward and are
never fitted, (w2, b2) are solved in closed form per time patch. Training
chains one block per patch, aggregating each block's matrices into the next
block's prior; the finished model is just the last block plus preprocessing
metadata.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .metrics import mae
from .numerics import ShapeError, as_matrix, logit, matmul, ridge_solve, sigmoid
from .preprocessing import PatchedDataset

MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Persisted model file is malformed or has an unsupported version."""


@dataclass(frozen=True)
class StcnWeights:
    """One block's matrices: prior (w1, b1) and fitted (w2, b2)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name in ("w1", "b1", "w2", "b2"):
            coerced = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if not np.all(np.isfinite(coerced)):
                raise ValueError(f"{name} contains NaN or Inf entries")
            object.__setattr__(self, name, coerced)
        m = self.w1.shape[0]
        for name in ("w1", "w2"):
            mat = getattr(self, name)
            if mat.shape != (m, m):
                raise ShapeError(f"{name} must be {m}x{m}, got {mat.shape}")
        for name in ("b1", "b2"):
            bias = getattr(self, name)
            if bias.shape != (1, m):
                raise ShapeError(f"{name} must be 1x{m}, got {bias.shape}")

    @property
    def size(self) -> int:
        return self.w1.shape[0]


@dataclass
class LstcnModel:
    """A trained forecaster: final block weights plus pipeline metadata."""

    weights: StcnWeights
    n_features: int
    steps_ahead: int
    lam: float
    patches: int
    scaling: list[tuple[str, float, float]]
    seed: int
    sigma: float
    window: int
    per_patch_training_error: list[float] = field(default_factory=list)

    @property
    def width(self) -> int:
        """Block width M = n_features * steps_ahead."""
        return self.n_features * self.steps_ahead

    @property
    def feature_names(self) -> list[str]:
        return [name for name, _, _ in self.scaling]

    @property
    def feature_scaling(self) -> list[tuple[float, float]]:
        return [(lo, hi) for _, lo, hi in self.scaling]


def stcn_hidden(x: np.ndarray, w1: np.ndarray, b1: np.ndarray) -> np.ndarray:
    """Inner layer: sigmoid(x . w1 + b1), rows broadcast over the bias."""
    b1 = np.atleast_2d(np.asarray(b1, dtype=float))
    return sigmoid(matmul(x, w1) + b1)


def stcn_output(h: np.ndarray, w2: np.ndarray, b2: np.ndarray) -> np.ndarray:
    """Outer layer: sigmoid(h . w2 + b2)."""
    b2 = np.atleast_2d(np.asarray(b2, dtype=float))
    return sigmoid(matmul(h, w2) + b2)


def aggregate_prior(prev: StcnWeights) -> tuple[np.ndarray, np.ndarray]:
    """Fold a block's matrices into the next block's prior.

    Elementwise tanh(max(prior, fitted)) for both the weight and bias pair,
    which bounds every injected prior entry inside (-1, 1).
    """
    w1_next = np.tanh(np.maximum(prev.w1, prev.w2))
    b1_next = np.tanh(np.maximum(prev.b1, prev.b2))
    return w1_next, b1_next


def _fit_readout(
    h: np.ndarray, y: np.ndarray, lam: float, epsilon: float
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form ridge fit of (w, b) such that sigmoid(h.w + b) targets y.

    The columns of h are standardized to zero mean and unit variance before
    solving, and the solution is mapped back so the returned weights apply
    to the raw h directly: h.w + b == h_std.w_std + b_std up to rounding.
    Zero-variance columns skip standardization entirely (mean 0, std 1);
    centering them would zero the column and defeat the diagonal penalty
    that keeps tiny systems solvable.
    """
    k, m = h.shape
    degenerate = h.std(axis=0) < 1e-12
    means = np.where(degenerate, 0.0, h.mean(axis=0))
    stds = np.where(degenerate, 1.0, h.std(axis=0))
    h_std = (h - means) / stds
    phi = np.hstack([h_std, np.ones((k, 1))])
    gamma = ridge_solve(phi, logit(y, epsilon), lam)
    w = gamma[:m] / stds[:, None]
    b = gamma[m:] - (means / stds) @ gamma[:m]
    return w, b.reshape(1, -1)


def fit_block(
    x: np.ndarray,
    y: np.ndarray,
    w1: np.ndarray,
    b1: np.ndarray,
    lam: float,
    epsilon: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve one block's learnable matrices for a single time patch.

    Parameters
    ----------
    x, y : (K, M) arrays
        Patch inputs and expected outputs; y entries must lie in [0, 1].
    w1 : (M, M) array, b1 : (1, M) array
        The block's fixed prior.
    lam : float
        Ridge penalty.
    epsilon : float
        Clamp used when pulling y back through the transfer function.

    Returns
    -------
    (w2, b2) of shapes (M, M) and (1, M).
    """
    h = stcn_hidden(x, w1, b1)
    return _fit_readout(h, y, lam, epsilon)


def init_prior(
    smoothed: PatchedDataset, lam: float, sigma: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Synthesize the first block's prior from a smoothed copy of the series.

    Fits a stateless block (hidden layer equal to the input) on the smoothed
    window pairs with the same standardize/solve/unscale protocol as
    :func:`fit_block`, then perturbs both matrices with seeded white noise
    of standard deviation ``sigma`` to compensate for the smoothing.
    """
    if sigma < 0:
        raise ValueError(f"noise standard deviation must be nonnegative, got {sigma}")
    x, y = smoothed.all_pairs()
    w, b = _fit_readout(x, y, lam, epsilon=1e-6)
    rng = np.random.default_rng(seed)
    w = w + rng.normal(0.0, sigma, size=w.shape)
    b = b + rng.normal(0.0, sigma, size=b.shape)
    return w, b


def train(
    dataset: PatchedDataset,
    prior_w2: np.ndarray,
    prior_b2: np.ndarray,
    lam: float,
    *,
    scaling: list[tuple[str, float, float]] | None = None,
    seed: int = 0,
    sigma: float = 0.05,
    window: int = 100,
    epsilon: float = 1e-6,
) -> LstcnModel:
    """Train one block per time patch, chaining priors forward.

    The first block's prior is the aggregation rule applied to the injected
    (prior_w2, prior_b2) pair, i.e. tanh of it. Each block is fitted on its
    patch, its training MAE recorded on that same patch, and its matrices
    aggregated into the next block's prior. The returned model keeps only
    the final block.
    """
    if not dataset.patches:
        raise ValueError("dataset has no patches")
    pseudo = StcnWeights(w1=prior_w2, b1=prior_b2, w2=prior_w2, b2=prior_b2)
    w1, b1 = aggregate_prior(pseudo)
    errors: list[float] = []
    block = None
    for x, y in dataset.patches:
        w2, b2 = fit_block(x, y, w1, b1, lam, epsilon)
        block = StcnWeights(w1=w1, b1=b1, w2=w2, b2=b2)
        predicted = stcn_output(stcn_hidden(x, w1, b1), w2, b2)
        errors.append(mae(predicted, y))
        w1, b1 = aggregate_prior(block)
    return LstcnModel(
        weights=block,
        n_features=dataset.features,
        steps_ahead=dataset.window_len,
        lam=lam,
        patches=len(dataset.patches),
        scaling=list(scaling) if scaling is not None else
        [(f"f{i + 1}", 0.0, 1.0) for i in range(dataset.features)],
        seed=seed,
        sigma=sigma,
        window=window,
        per_patch_training_error=errors,
    )


def forecast(model: LstcnModel, x: np.ndarray) -> np.ndarray:
    """Run the final block on flattened input windows; output is in (0, 1)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.width:
        raise ShapeError(
            f"input has {x.shape[1] if x.ndim == 2 else '?'} columns, model "
            f"expects {model.width} ({model.n_features} features x "
            f"{model.steps_ahead} steps ahead)"
        )
    w = model.weights
    return stcn_output(stcn_hidden(x, w.w1, w.b1), w.w2, w.b2)


def _encode_matrix(matrix: np.ndarray) -> dict:
    return {
        "rows": int(matrix.shape[0]),
        "cols": int(matrix.shape[1]),
        "data": matrix.ravel().tolist(),
    }


def _decode_matrix(obj, name: str) -> np.ndarray:
    try:
        rows, cols, data = obj["rows"], obj["cols"], obj["data"]
    except (TypeError, KeyError) as exc:
        raise ModelFormatError(f"field '{name}' is not a matrix object") from exc
    if len(data) != rows * cols:
        raise ModelFormatError(
            f"field '{name}' declares {rows}x{cols} but carries {len(data)} values"
        )
    matrix = np.array(data, dtype=float).reshape(rows, cols)
    return as_matrix(matrix, name)


def atomic_write_text(path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a torn file."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(model: LstcnModel, path) -> None:
    """Persist a model as a self-describing JSON document.

    Floats are written in their shortest round-trippable decimal form, so a
    save/load cycle reproduces every matrix bit for bit.
    """
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "n_features": model.n_features,
        "steps_ahead": model.steps_ahead,
        "lambda": float(model.lam),
        "patches": model.patches,
        "seed": model.seed,
        "sigma": float(model.sigma),
        "window": model.window,
        "scaling": [
            {"name": name, "min": float(lo), "max": float(hi)}
            for name, lo, hi in model.scaling
        ],
        "w1": _encode_matrix(model.weights.w1),
        "b1": _encode_matrix(model.weights.b1),
        "w2": _encode_matrix(model.weights.w2),
        "b2": _encode_matrix(model.weights.b2),
        "per_patch_training_error": [float(e) for e in model.per_patch_training_error],
    }
    atomic_write_text(path, json.dumps(doc))


def load_model(path) -> LstcnModel:
    """Read a model written by :func:`save_model`, validating shape metadata."""
    try:
        with open(path) as handle:
            doc = json.load(handle)
    except FileNotFoundError:
        raise ModelFormatError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"could not parse model file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model file does not hold an object")
    version = doc.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format version {version!r}, expected "
            f"{MODEL_FORMAT_VERSION}"
        )
    try:
        n_features = int(doc["n_features"])
        steps_ahead = int(doc["steps_ahead"])
        lam = float(doc["lambda"])
        patches = int(doc["patches"])
        seed = int(doc["seed"])
        sigma = float(doc["sigma"])
        window = int(doc["window"])
        scaling = [
            (str(e["name"]), float(e["min"]), float(e["max"]))
            for e in doc["scaling"]
        ]
        errors = [float(e) for e in doc["per_patch_training_error"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model file field invalid: {exc}") from exc
    weights = StcnWeights(
        w1=_decode_matrix(doc.get("w1"), "w1"),
        b1=_decode_matrix(doc.get("b1"), "b1"),
        w2=_decode_matrix(doc.get("w2"), "w2"),
        b2=_decode_matrix(doc.get("b2"), "b2"),
    )
    width = n_features * steps_ahead
    if weights.size != width:
        raise ModelFormatError(
            f"weight width {weights.size} does not match {n_features} features "
            f"x {steps_ahead} steps ahead"
        )
    if len(scaling) != n_features:
        raise ModelFormatError(
            f"{len(scaling)} scaling entries for {n_features} features"
        )
    return LstcnModel(
        weights=weights,
        n_features=n_features,
        steps_ahead=steps_ahead,
        lam=lam,
        patches=patches,
        scaling=scaling,
        seed=seed,
        sigma=sigma,
        window=window,
        per_patch_training_error=errors,
    )


def load_prior(path) -> tuple[np.ndarray, np.ndarray]:
    """Read an externally supplied prior, e.g. expert knowledge or transfer.

    Expects a JSON object with matrix fields ``w2`` and ``b2`` in the same
    rows/cols/data encoding as the model file.
    """
    try:
        with open(path) as handle:
            doc = json.load(handle)
    except FileNotFoundError:
        raise ModelFormatError(f"prior file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"could not parse prior file {path}: {exc}") from exc
    w2 = _decode_matrix(doc.get("w2"), "w2")
    b2 = _decode_matrix(doc.get("b2"), "b2")
    if b2.shape != (1, w2.shape[0]) or w2.shape[0] != w2.shape[1]:
        raise ModelFormatError(
            f"prior shapes inconsistent: w2 {w2.shape}, b2 {b2.shape}"
        )
    return w2, b2
