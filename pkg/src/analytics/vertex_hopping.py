from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np
from scipy import linalg

from src.analytics.channel_model import check_msp
from src.analytics.matrix_core import inverse, log_abs_det, sherman_morrison_update
from src.analytics.spectrum import (
    MAX_DET,
    integer_det,
    matches_stopping_rule,
    supports_stopping_rule,
)
from src.core.errors import RankDeficientError, SingularIterateError
from src.models.vertex import ColumnPartition, SearchOutcome, VertexState
from src.schemas.solver import SearchConfig

logger = logging.getLogger(__name__)

HopRejection = Literal["infeasible", "singular"]

SINGULAR_RATIO = 1e-9
RATIO_ORDER_DECIMALS = 9
REBASE_GAIN = 1e-9
NEAR_THRESHOLD_OVERSHOOT = 1e-4


def vertex_key(U: np.ndarray, Y: np.ndarray, tol: float) -> bytes:
    values = U @ Y
    plus = np.packbits(values >= 1.0 - tol)
    minus = np.packbits(values <= -1.0 + tol)
    return plus.tobytes() + minus.tobytes()


def partition_columns(U: np.ndarray, Y: np.ndarray, tol: float = 1e-7) -> ColumnPartition:
    n = Y.shape[0]
    values = U @ Y
    good_mask = np.all(np.abs(np.abs(values) - 1.0) <= tol, axis=0)
    good = np.flatnonzero(good_mask)
    bad = np.flatnonzero(~good_mask)
    if good.size < n:
        raise RankDeficientError(rank=int(good.size), n=n)

    signs = np.where(values[:, good] >= 0, 1.0, -1.0)
    _, r_factor, pivots = linalg.qr(signs, mode="economic", pivoting=True)
    diagonal = np.abs(np.diag(r_factor))
    independent = int((diagonal > 1e-9 * max(float(diagonal[0]), 1.0)).sum())
    if independent < n:
        raise RankDeficientError(rank=independent, n=n)

    basis = np.sort(good[pivots[:n]])
    V = Y[:, basis]
    Vinv = inverse(V)
    if Vinv is None:
        raise RankDeficientError(rank=n - 1, n=n)
    S = np.where(values[:, basis] >= 0, 1.0, -1.0)
    return ColumnPartition(good=good, bad=bad, basis=basis, V=V, Vinv=Vinv, S=S)


def state_from_partition(partition: ColumnPartition, Y: np.ndarray, tol: float) -> VertexState:
    U = partition.S @ partition.Vinv
    Uinv = inverse(U)
    objective = log_abs_det(U)
    if Uinv is None or objective is None:
        raise SingularIterateError("Basis sign matrix is singular")
    return VertexState(
        S=partition.S,
        U=U,
        Uinv=Uinv,
        objective=objective,
        key=vertex_key(U, Y, tol),
        basis=partition.basis,
        Vinv=partition.Vinv,
    )


def _maximal_good_basis(
    values: np.ndarray,
    Y: np.ndarray,
    good_mask: np.ndarray,
    basis: np.ndarray,
    Vinv: np.ndarray,
    search_limit: int,
) -> tuple[np.ndarray, np.ndarray]:
    n = basis.size
    signs = np.where(values[:, basis] >= 0, 1.0, -1.0)
    if abs(integer_det(signs)) == MAX_DET[n]:
        return basis, Vinv
    good = np.flatnonzero(good_mask)
    if math.comb(good.size, n) > search_limit:
        return basis, Vinv
    check = check_msp(
        np.where(values[:, good] >= 0, 1.0, -1.0),
        exhaustive_limit=search_limit,
        random_budget=0,
    )
    if not check.has_msp:
        return basis, Vinv
    candidate = good[list(check.witness_columns)]
    candidate_inv = inverse(Y[:, candidate])
    if candidate_inv is None:
        return basis, Vinv
    return candidate, candidate_inv


def rebase(
    state: VertexState, Y: np.ndarray, tol: float = 1e-7, search_limit: int = 0
) -> VertexState:
    """Degenerate basis exchange: swap good columns into the basis while |det S| grows.

    U does not change; only the basis (and with it S and Vinv) moves toward a locally
    maximal sign submatrix. When the exchange stalls short of the maximal determinant and
    the good columns admit at most `search_limit` subsets, they are searched exhaustively.
    """
    values = state.U @ Y
    good_mask = np.all(np.abs(np.abs(values) - 1.0) <= tol, axis=0)
    basis = state.basis.copy()
    Vinv = state.Vinv
    n = basis.size
    for _ in range(n * Y.shape[1]):
        coefficients = np.abs(Vinv @ Y)
        coefficients[:, ~good_mask] = 0.0
        coefficients[np.arange(n), basis] = 0.0
        slot, column = np.unravel_index(int(np.argmax(coefficients)), coefficients.shape)
        if coefficients[slot, column] <= 1.0 + REBASE_GAIN:
            break
        basis[slot] = column
        updated = inverse(Y[:, basis])
        if updated is None:
            break
        Vinv = updated
    if search_limit and n in MAX_DET:
        basis, Vinv = _maximal_good_basis(values, Y, good_mask, basis, Vinv, search_limit)
    if np.array_equal(basis, state.basis):
        return state
    S = np.where(values[:, basis] >= 0, 1.0, -1.0)
    return VertexState(
        S=S,
        U=state.U,
        Uinv=state.Uinv,
        objective=state.objective,
        key=state.key,
        basis=basis,
        Vinv=Vinv,
    )


def neighbor_ratios(state: VertexState) -> np.ndarray:
    """|det U'| / |det U| for every single sign flip of S, all at once."""
    coupling = (state.Vinv @ state.Uinv).T
    return np.abs(1.0 - 2.0 * state.S * coupling)


def score_neighbor(state: VertexState, row: int, column: int) -> float:
    delta = -2.0 * state.S[row, column] * state.Vinv[column]
    return abs(1.0 + float(delta @ state.Uinv[:, row]))


def row_overshoot(state: VertexState, row: int, column: int, Y: np.ndarray) -> float:
    delta = -2.0 * state.S[row, column] * state.Vinv[column]
    return float(np.abs((state.U[row] + delta) @ Y).max()) - 1.0


def hop(
    state: VertexState, row: int, column: int, Y: np.ndarray, cfg: Optional[SearchConfig] = None
) -> Union[VertexState, HopRejection]:
    cfg = cfg or SearchConfig()
    ratio = score_neighbor(state, row, column)
    if ratio <= SINGULAR_RATIO:
        return "singular"

    delta = -2.0 * state.S[row, column] * state.Vinv[column]
    new_row = state.U[row] + delta
    if float(np.abs(new_row @ Y).max()) > 1.0 + cfg.feas_tol:
        return "infeasible"

    U = state.U.copy()
    U[row] = new_row
    Uinv = sherman_morrison_update(
        state.Uinv, row, delta, scale=float(np.abs(U).sum(axis=1).max())
    )
    if Uinv is None:
        return "singular"
    S = state.S.copy()
    S[row, column] = -S[row, column]
    return VertexState(
        S=S,
        U=U,
        Uinv=Uinv,
        objective=state.objective + math.log(ratio),
        key=vertex_key(U, Y, cfg.partition_tol),
        basis=state.basis,
        Vinv=state.Vinv,
    )


def is_global_optimum(
    state: VertexState, n: int, ratios: Optional[np.ndarray] = None
) -> bool:
    """A maximal |det S| certifies on its own; otherwise the neighbor-ratio rule decides."""
    if has_spectrum_certificate(state):
        return True
    return matches_stopping_rule(neighbor_ratios(state) if ratios is None else ratios, n)


def has_spectrum_certificate(state: VertexState) -> bool:
    n = state.S.shape[0]
    return n in MAX_DET and abs(integer_det(state.S)) == MAX_DET[n]


@dataclass
class _Frame:
    state: VertexState
    order: np.ndarray
    position: int = 0


def _candidate_order(ratios: np.ndarray) -> np.ndarray:
    flat = ratios.reshape(-1)
    eligible = np.flatnonzero(flat > SINGULAR_RATIO)
    rounded = np.round(flat[eligible], RATIO_ORDER_DECIMALS)
    # lexsort: last key is primary; ties fall back to the smaller flat index.
    return eligible[np.lexsort((eligible, -rounded))]


def search(
    U0: np.ndarray,
    Y: np.ndarray,
    cfg: Optional[SearchConfig] = None,
    partition: Optional[ColumnPartition] = None,
) -> SearchOutcome:
    """Depth-first pivoting over nonsingular vertices, largest ratio first, with backtracking."""
    cfg = cfg or SearchConfig()
    n, k = Y.shape
    limit = cfg.vertex_limit(n, k)
    signature_available = supports_stopping_rule(n)

    partition = partition or partition_columns(U0, Y, cfg.partition_tol)
    start = rebase(
        state_from_partition(partition, Y, cfg.partition_tol),
        Y,
        cfg.partition_tol,
        cfg.basis_search_limit,
    )
    initial_objective = start.objective
    visited = {start.key}
    stack: list[_Frame] = []
    hops = 0
    backtracks = 0
    near_threshold = False

    def outcome(status, state, certified_by=None) -> SearchOutcome:  # type: ignore[no-untyped-def]
        return SearchOutcome(
            status=status,
            state=state,
            hops=hops,
            visited=len(visited),
            backtracks=backtracks,
            suspected_false_trap=near_threshold and status != "global_optimum",
            objective_path=(state.objective - initial_objective) if state else 0.0,
            certified_by=certified_by,
        )

    current: Optional[_Frame] = None
    pending: Optional[VertexState] = start
    while True:
        if pending is not None:
            state = pending
            pending = None
            if cfg.use_spectrum_certificate and has_spectrum_certificate(state):
                return outcome("global_optimum", state, certified_by="spectrum")
            ratios = neighbor_ratios(state)
            if signature_available and matches_stopping_rule(ratios, n):
                return outcome("global_optimum", state, certified_by="neighbor_signature")
            if current is not None:
                stack.append(current)
            current = _Frame(state=state, order=_candidate_order(ratios))

        assert current is not None
        while current.position < current.order.size:
            flat = int(current.order[current.position])
            current.position += 1
            row, column = divmod(flat, n)
            moved = hop(current.state, row, column, Y, cfg)
            if moved == "infeasible":
                if row_overshoot(current.state, row, column, Y) <= NEAR_THRESHOLD_OVERSHOOT:
                    near_threshold = True
                continue
            if moved == "singular":
                continue
            moved = rebase(moved, Y, cfg.partition_tol, cfg.basis_search_limit)
            if moved.key in visited:
                continue
            visited.add(moved.key)
            hops += 1
            if len(visited) > limit:
                logger.debug("vertex_search_visit_limit", extra={"visited": len(visited)})
                return outcome("visit_limit", moved)
            pending = moved
            break

        if pending is not None:
            continue
        if not stack:
            logger.debug("vertex_search_trap", extra={"visited": len(visited), "hops": hops})
            return outcome("trap", current.state)
        current = stack.pop()
        backtracks += 1
