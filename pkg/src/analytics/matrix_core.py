from __future__ import annotations

import warnings
from typing import Optional

import numpy as np
from scipy import linalg

from src.core.errors import SingularMatrixError

Matrix = np.ndarray

SINGULAR_REL_TOL = 1e-12


def vec(matrix: Matrix) -> np.ndarray:
    return np.ascontiguousarray(matrix, dtype=float).reshape(-1)


def mat(vector: np.ndarray, rows: int, cols: int) -> Matrix:
    values = np.asarray(vector, dtype=float)
    if values.size != rows * cols:
        raise ValueError(f"Cannot reshape {values.size} entries into {rows}x{cols}")
    return values.reshape(rows, cols).copy()


def singularity_threshold(matrix: Matrix) -> float:
    scale = float(np.abs(matrix).sum(axis=1).max()) if matrix.size else 0.0
    return SINGULAR_REL_TOL * max(scale, 1.0)


def _lu(matrix: Matrix) -> Optional[tuple[np.ndarray, np.ndarray]]:
    square = np.asarray(matrix, dtype=float)
    if square.ndim != 2 or square.shape[0] != square.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {square.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(square, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.size and pivots.min() < singularity_threshold(square):
        return None
    return lu, piv


def log_abs_det(matrix: Matrix) -> Optional[float]:
    """Return ln|det U| via partial-pivoting LU, or None when U is numerically singular."""
    factored = _lu(matrix)
    if factored is None:
        return None
    lu, _ = factored
    return float(np.log(np.abs(np.diag(lu))).sum())


def inverse(matrix: Matrix) -> Optional[Matrix]:
    factored = _lu(matrix)
    if factored is None:
        return None
    n = matrix.shape[0]
    return linalg.lu_solve(factored, np.eye(n))


def grad_log_abs_det(matrix: Matrix) -> Matrix:
    inv = inverse(matrix)
    if inv is None:
        raise SingularMatrixError("Gradient of log|det U| is undefined at a singular U")
    return np.ascontiguousarray(inv.T)


def rank(matrix: Matrix, tol: float = 1e-9) -> int:
    values = np.asarray(matrix, dtype=float)
    if values.size == 0:
        return 0
    singular_values = linalg.svdvals(values)
    return int((singular_values > tol).sum())


def condition_number(matrix: Matrix) -> float:
    singular_values = linalg.svdvals(np.asarray(matrix, dtype=float))
    smallest = float(singular_values[-1])
    if smallest == 0.0:
        return float("inf")
    return float(singular_values[0]) / smallest


def sherman_morrison_update(
    inv: Matrix, row: int, delta: np.ndarray, scale: float = 1.0
) -> Optional[Matrix]:
    """Inverse of U + e_row * delta given inv = U^-1.

    `scale` is the infinity-norm of the updated U, used for the singular cutoff.
    """
    column = inv[:, row]
    denominator = 1.0 + float(delta @ column)
    if abs(denominator) < SINGULAR_REL_TOL * max(scale, 1.0):
        return None
    return inv - np.outer(column, delta @ inv) / denominator


def random_orthogonal(n: int, rng: np.random.Generator) -> Matrix:
    if n < 1:
        raise ValueError("n must be at least 1")
    gaussian = rng.standard_normal((n, n))
    q, r = linalg.qr(gaussian)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def sign_pm(matrix: Matrix) -> Matrix:
    return np.where(np.asarray(matrix) >= 0, 1.0, -1.0)
