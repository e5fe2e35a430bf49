from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.schemas.solver import SearchStatus


@dataclass(frozen=True)
class ColumnPartition:
    good: np.ndarray
    bad: np.ndarray
    basis: np.ndarray
    V: np.ndarray
    Vinv: np.ndarray
    S: np.ndarray


@dataclass(frozen=True)
class VertexState:
    """Nonsingular vertex in basis form: U == S @ Vinv with V = Y[:, basis]."""

    S: np.ndarray
    U: np.ndarray
    Uinv: np.ndarray
    objective: float
    key: bytes
    basis: np.ndarray
    Vinv: np.ndarray


@dataclass
class SearchOutcome:
    status: SearchStatus
    state: Optional[VertexState]
    hops: int = 0
    visited: int = 0
    backtracks: int = 0
    suspected_false_trap: bool = False
    objective_path: float = 0.0
    certified_by: Optional[str] = None
