from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ChannelInstance:
    n: int
    k: int
    A: np.ndarray
    X: np.ndarray
    sigma: float
    Y: np.ndarray
    seed: tuple[int, ...] = ()
    distribution: str = "gaussian"


@dataclass(frozen=True)
class Atm:
    """Signed row permutation: row i of the target equals signs[i] * row perm[i] of the source."""

    perm: np.ndarray
    signs: np.ndarray

    def as_matrix(self) -> np.ndarray:
        n = self.perm.size
        matrix = np.zeros((n, n))
        matrix[np.arange(n), self.perm] = self.signs
        return matrix

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        return self.signs[:, np.newaxis] * matrix[self.perm]


@dataclass(frozen=True)
class MspCheck:
    has_msp: bool
    exhaustive: bool
    subsets_checked: int
    witness_columns: tuple[int, ...] = field(default=())
