from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core.errors import UnsupportedDimensionError

MAX_DET: dict[int, int] = {
    1: 1,
    2: 2,
    3: 4,
    4: 16,
    5: 48,
    6: 160,
    7: 576,
    8: 4096,
    9: 14336,
    10: 73728,
    11: 327680,
    12: 2985984,
}

RATIO_REL_TOL = 1e-6
NO_LOCAL_OPTIMA_MAX_N = 5
NO_LOCAL_OPTIMA_MARGIN = 1e-9


@dataclass(frozen=True)
class StoppingSignature:
    """Neighbor |det| ratios at a maximal vertex.

    `counts` of None means each listed ratio must appear at least once and nothing else may.
    """

    ratios: tuple[float, ...]
    counts: Optional[tuple[int, ...]] = None


STOPPING_SIGNATURES: dict[int, StoppingSignature] = {
    6: StoppingSignature(ratios=(4 / 5, 3 / 5, 2 / 5)),
    8: StoppingSignature(ratios=(3 / 4,), counts=(64,)),
    10: StoppingSignature(ratios=(2 / 3, 5 / 6), counts=(20, 80)),
    12: StoppingSignature(ratios=(5 / 6,), counts=(144,)),
}


def max_det(n: int) -> int:
    try:
        return MAX_DET[n]
    except KeyError as exc:
        raise UnsupportedDimensionError(n, what="maximal determinant") from exc


def supports_stopping_rule(n: int) -> bool:
    return 1 <= n <= NO_LOCAL_OPTIMA_MAX_N or n in STOPPING_SIGNATURES


def integer_det(sign_matrix: np.ndarray) -> int:
    return int(round(float(np.linalg.det(np.asarray(sign_matrix, dtype=float)))))


def neighbor_det_signature(sign_matrix: np.ndarray) -> list[int]:
    """|det| of every single-entry sign flip, in row-major flip order."""
    base = np.asarray(sign_matrix, dtype=float)
    n = base.shape[0]
    flips = np.repeat(base[np.newaxis, :, :], n * n, axis=0)
    index = np.arange(n * n)
    flips[index, index // n, index % n] *= -1.0
    return [abs(int(round(value))) for value in np.linalg.det(flips)]


def is_maximal_sign_matrix(sign_matrix: np.ndarray) -> bool:
    n = sign_matrix.shape[0]
    if n not in MAX_DET:
        return False
    return abs(integer_det(sign_matrix)) == MAX_DET[n]


def _close(value: float, target: float) -> bool:
    return abs(value - target) <= RATIO_REL_TOL * max(abs(target), 1e-300)


def _bucket(ratio: float, targets: tuple[float, ...]) -> Optional[int]:
    for position, target in enumerate(targets):
        if _close(ratio, target):
            return position
    return None


def matches_stopping_rule(ratios: np.ndarray, n: int) -> bool:
    values = np.asarray(ratios, dtype=float).reshape(-1)
    if 1 <= n <= NO_LOCAL_OPTIMA_MAX_N:
        return bool(np.all(values < 1.0 - NO_LOCAL_OPTIMA_MARGIN))

    signature = STOPPING_SIGNATURES.get(n)
    if signature is None:
        raise UnsupportedDimensionError(n, what="stopping signature")

    buckets: Counter[int] = Counter()
    for ratio in values:
        position = _bucket(float(ratio), signature.ratios)
        if position is None:
            return False
        buckets[position] += 1

    if signature.counts is None:
        return len(buckets) == len(signature.ratios)
    return all(buckets[position] == count for position, count in enumerate(signature.counts))
