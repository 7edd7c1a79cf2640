"""Fast multivariate time-series forecasting with chained cognitive blocks.

The public surface re-exports the pieces most callers need: the data
pipeline, the closed-form trainer, error metrics, influence scores, and the
grid-search tuner. The ``lstcn`` console script wraps the same functions.
"""

from .interpret import (
    InfluenceMatrix,
    combined_weights,
    influence,
    model_influence,
    normalize_influence,
    weight_histogram,
)
from .metrics import mae, persistence_forecast
from .model import (
    LstcnModel,
    StcnWeights,
    aggregate_prior,
    fit_block,
    forecast,
    init_prior,
    load_model,
    load_prior,
    save_model,
    stcn_hidden,
    stcn_output,
    train,
)
from .numerics import (
    ShapeError,
    SingularMatrixError,
    logit,
    matmul,
    ridge_solve,
    sigmoid,
)
from .preprocessing import (
    DataError,
    PatchedDataset,
    SeriesTable,
    denormalize,
    impute,
    load_csv,
    make_patches,
    moving_average,
    normalize,
    trim_to_multiple,
    window_matrix,
)
from .tuning import TuningGrid, TuningReport, tune

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "InfluenceMatrix",
    "LstcnModel",
    "PatchedDataset",
    "SeriesTable",
    "ShapeError",
    "SingularMatrixError",
    "StcnWeights",
    "TuningGrid",
    "TuningReport",
    "aggregate_prior",
    "combined_weights",
    "denormalize",
    "fit_block",
    "forecast",
    "impute",
    "influence",
    "init_prior",
    "load_csv",
    "load_model",
    "load_prior",
    "logit",
    "mae",
    "make_patches",
    "matmul",
    "model_influence",
    "moving_average",
    "normalize",
    "normalize_influence",
    "persistence_forecast",
    "ridge_solve",
    "save_model",
    "sigmoid",
    "stcn_hidden",
    "stcn_output",
    "train",
    "trim_to_multiple",
    "tune",
    "weight_histogram",
    "window_matrix",
]
