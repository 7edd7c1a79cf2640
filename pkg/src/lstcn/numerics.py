"""Dense matrix helpers and the regularized closed-form least-squares solver.

Everything here is a pure function on float64 arrays. Matrices are plain
2-D numpy arrays; there is no wrapper type.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy.special import expit


class ShapeError(ValueError):
    """Operand dimensions are incompatible for the requested operation."""


class SingularMatrixError(ValueError):
    """The regularized normal matrix could not be solved reliably."""


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array, or raise ValueError."""
    a = np.asarray(values, dtype=float)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got {a.ndim}-D")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit shape check naming both operands."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return a @ b


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Elementwise 1/(1+exp(-x)). Saturates instead of overflowing."""
    return expit(np.asarray(x, dtype=float))


def logit(y: np.ndarray, epsilon: float = 1e-6) -> np.ndarray:
    """Elementwise ln(y/(1-y)) after clamping y into [epsilon, 1-epsilon].

    Exact inverse of :func:`sigmoid` for y in (epsilon, 1-epsilon); the clamp
    keeps min-max normalized targets that touch 0 or 1 finite.
    """
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must be in (0, 0.5), got {epsilon}")
    clamped = np.clip(np.asarray(y, dtype=float), epsilon, 1.0 - epsilon)
    return np.log(clamped) - np.log1p(-clamped)


def ridge_solve(phi: np.ndarray, z: np.ndarray, lam: float) -> np.ndarray:
    """Solve the regularized least-squares system for a design matrix phi.

    Returns gamma = (phi' phi + lam * omega)^-1 phi' z, where omega is the
    diagonal of phi' phi kept as a diagonal matrix. The system is solved via
    a Cholesky factorization (the matrix is symmetric positive definite for
    lam > 0 and nonzero columns), falling back to a pivoted symmetric solve.

    Parameters
    ----------
    phi : (K, P) array
        Design matrix.
    z : (K, Q) array
        Targets, one column per output.
    lam : float
        Nonnegative ridge penalty.

    Returns
    -------
    (P, Q) array of coefficients.

    Raises
    ------
    SingularMatrixError
        If phi has an all-zero column (the diagonal penalty cannot
        regularize it) or the normal matrix is numerically singular.
    """
    phi = np.asarray(phi, dtype=float)
    z = np.asarray(z, dtype=float)
    if phi.ndim != 2 or z.ndim != 2 or phi.shape[0] != z.shape[0]:
        raise ShapeError(
            f"design {phi.shape[0]}x{phi.shape[1]} and targets "
            f"{z.shape[0]}x{z.shape[1]} must have the same row count"
        )
    if lam < 0:
        raise ValueError(f"ridge penalty must be nonnegative, got {lam}")

    gram = phi.T @ phi
    diag = np.diagonal(gram)
    zero_cols = np.flatnonzero(diag == 0.0)
    if zero_cols.size:
        raise SingularMatrixError(
            f"design column {zero_cols[0]} is identically zero; the diagonal "
            "penalty cannot regularize it, drop the column instead"
        )

    normal = gram + lam * np.diag(diag)
    rhs = phi.T @ z
    eps = np.finfo(float).eps
    try:
        factor = scipy.linalg.cho_factor(normal, check_finite=False)
    except np.linalg.LinAlgError:
        # The matrix is symmetric PSD by construction, so a failed Cholesky
        # means it is singular up to rounding. Fall back to a pivoted
        # symmetric solve, but refuse to return garbage from a system whose
        # conditioning has no trustworthy digits left.
        if np.linalg.cond(normal) > 1.0 / (normal.shape[0] * eps):
            raise SingularMatrixError(
                "normal matrix is singular; raise the ridge penalty lambda"
            ) from None
        try:
            gamma = scipy.linalg.solve(normal, rhs, assume_a="sym", check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(
                "normal matrix is singular; raise the ridge penalty lambda"
            ) from exc
        if not np.all(np.isfinite(gamma)):
            raise SingularMatrixError(
                "normal matrix is singular; raise the ridge penalty lambda"
            )
        return gamma

    # Tiny pivots mean the factorization "succeeded" on a numerically
    # singular matrix; report that instead of silently producing garbage.
    pivots = np.abs(np.diagonal(factor[0]))
    if pivots.min() <= pivots.max() * np.sqrt(normal.shape[0] * eps):
        raise SingularMatrixError(
            "normal matrix is numerically singular; raise the ridge penalty lambda"
        )
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)
