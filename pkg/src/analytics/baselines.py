from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np
from scipy.optimize import linear_sum_assignment

from src.analytics.matrix_core import inverse, sign_pm
from src.core.errors import InputError, SingularMatrixError

ML_MAX_N = 14


def zero_forcing(Y: np.ndarray, A: np.ndarray) -> np.ndarray:
    inv = inverse(A)
    if inv is None:
        raise SingularMatrixError("Zero-forcing needs a nonsingular channel")
    return sign_pm(inv @ Y)


def imperfect_csi(
    A: np.ndarray, sigma: float, rho: float, rng: np.random.Generator
) -> np.ndarray:
    """Channel estimate A + E with E iid N(0, rho * sigma^2)."""
    return A + np.sqrt(rho) * sigma * rng.standard_normal(A.shape)


@lru_cache(maxsize=None)
def _candidates(n: int) -> np.ndarray:
    return np.array(list(product((-1.0, 1.0), repeat=n)))


def ml_decode(Y: np.ndarray, A_hat: np.ndarray) -> np.ndarray:
    n = A_hat.shape[0]
    if n > ML_MAX_N:
        raise InputError(f"Exhaustive ML decoding supports n <= {ML_MAX_N}")
    candidates = _candidates(n)
    images = candidates @ A_hat.T
    # ||y - Ax||^2 up to the ||y||^2 term shared by all candidates.
    distances = np.sum(images**2, axis=1)[:, np.newaxis] - 2.0 * images @ Y
    return candidates[np.argmin(distances, axis=0)].T.copy()


def ber(X: np.ndarray, Xhat: np.ndarray) -> float:
    """Bit error rate after the best signed row alignment of Xhat onto X."""
    if X.shape != Xhat.shape:
        raise InputError(f"Shape mismatch: {X.shape} vs {Xhat.shape}")
    n, k = X.shape
    agree = Xhat @ X.T
    # For +-1 rows, mismatches = (k - <a, b>) / 2.
    cost = np.minimum(k - agree, k + agree) / 2.0
    rows, columns = linear_sum_assignment(cost)
    return float(cost[rows, columns].sum()) / (n * k)
