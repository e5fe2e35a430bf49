from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from src.analytics.matrix_core import inverse, log_abs_det, random_orthogonal
from src.core.errors import SingularIterateError, UnboundedStepError, VertexFindingStalledError
from src.schemas.solver import FindConfig

logger = logging.getLogger(__name__)

REDUNDANT_TOL = 1e-10

ActiveEntry = tuple[int, int, int]


class ActiveSet:
    """Active constraints <u_i, y_j> = s, kept as per-row orthonormal blocks in y-space.

    Row (i, j, s) of the constraint matrix is y_j embedded at block i of vec(U), so rows with
    different i never overlap and each block is orthonormalized on its own.
    """

    def __init__(self, Y: np.ndarray) -> None:
        self.n = Y.shape[0]
        self.Y = Y
        self.entries: list[ActiveEntry] = []
        self.redundant: list[ActiveEntry] = []
        self.mask = np.zeros(Y.shape, dtype=bool)
        self._blocks: list[np.ndarray] = [np.zeros((0, self.n)) for _ in range(self.n)]
        self.inner_products = 0

    @property
    def rank(self) -> int:
        return sum(block.shape[0] for block in self._blocks)

    @property
    def is_full_rank(self) -> bool:
        return self.rank == self.n * self.n

    def block(self, row: int) -> np.ndarray:
        return self._blocks[row]

    def add(self, row: int, column: int, sign: int) -> bool:
        """Append a constraint; returns False when it was redundant."""
        if self.mask[row, column]:
            return False
        entry = (row, column, int(sign))
        self.entries.append(entry)
        self.mask[row, column] = True

        candidate = self.Y[:, column].astype(float)
        norm = float(np.linalg.norm(candidate))
        if norm == 0.0:
            self.redundant.append(entry)
            return False
        candidate = candidate / norm
        basis = self._blocks[row]
        # Two Gram-Schmidt passes keep the block orthonormal to ~1e-15.
        for _ in range(2):
            if basis.shape[0]:
                candidate = candidate - basis.T @ (basis @ candidate)
        residual = float(np.linalg.norm(candidate))
        if residual <= REDUNDANT_TOL:
            self.redundant.append(entry)
            return False
        self._blocks[row] = np.vstack([basis, candidate / residual])
        return True

    def project(self, delta: np.ndarray) -> np.ndarray:
        projected = np.array(delta, dtype=float, copy=True)
        for row, basis in enumerate(self._blocks):
            size = basis.shape[0]
            if size == 0:
                continue
            projected[row] -= basis.T @ (basis @ projected[row])
            self.inner_products += size
        return projected

    def dense_rows(self) -> np.ndarray:
        n = self.n
        rows = np.zeros((len(self.entries), n * n))
        for position, (row, column, _) in enumerate(self.entries):
            rows[position, row * n : (row + 1) * n] = self.Y[:, column]
        return rows


@dataclass
class FoundVertex:
    U: np.ndarray
    active: ActiveSet
    iterations: int
    rank: int
    face_moves: int = 0
    objective_path: list[float] = field(default_factory=list)


def feasible_start(Y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = Y.shape[0]
    orthogonal = random_orthogonal(n, rng)
    peak = float(np.abs(orthogonal @ Y).max())
    return orthogonal / peak


def project_to_nullspace(active: ActiveSet, delta: np.ndarray) -> np.ndarray:
    return active.project(delta)


def max_step(
    U: np.ndarray,
    delta: np.ndarray,
    Y: np.ndarray,
    activity_tol: float = 1e-9,
    exclude: Optional[np.ndarray] = None,
) -> tuple[float, list[ActiveEntry]]:
    """Largest t keeping |(U + t delta) Y| <= 1 entrywise, and the constraints it activates."""
    current = U @ Y
    rate = delta @ Y
    movable = rate != 0.0
    if exclude is not None:
        movable &= ~exclude
    if not movable.any():
        raise UnboundedStepError()

    bound = np.where(rate > 0, 1.0, -1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        roots = np.where(movable, (bound - current) / rate, np.inf)
    roots = np.maximum(roots, 0.0)
    step = float(roots.min())
    if not np.isfinite(step):
        raise UnboundedStepError()

    moved = current + step * rate
    hits = np.abs(np.abs(moved) - 1.0) <= activity_tol
    if exclude is not None:
        hits &= ~exclude
    blocking = np.unravel_index(int(np.argmin(roots)), roots.shape)
    hits[blocking] = True

    rows, columns = np.nonzero(hits)
    newly_active = [
        (int(row), int(column), 1 if moved[row, column] > 0 else -1)
        for row, column in zip(rows, columns)
    ]
    return step, newly_active


def _initial_active_set(U: np.ndarray, Y: np.ndarray, activity_tol: float) -> ActiveSet:
    active = ActiveSet(Y)
    values = U @ Y
    rows, columns = np.nonzero(np.abs(np.abs(values) - 1.0) <= activity_tol)
    for row, column in zip(rows, columns):
        active.add(int(row), int(column), 1 if values[row, column] > 0 else -1)
    return active


def _face_move(
    U: np.ndarray, Y: np.ndarray, active: ActiveSet, activity_tol: float
) -> tuple[np.ndarray, list[ActiveEntry]]:
    """Slide along the null space of one unfinished row block.

    Used where the projected gradient vanishes on a face of rank below n^2. Both signs of the
    direction are tried and the one leaving the larger |det U| wins.
    """
    n = active.n
    row = next(index for index in range(n) if active.block(index).shape[0] < n)
    block = active.block(row)
    free = linalg.null_space(block) if block.shape[0] else np.eye(n)
    best: Optional[tuple[float, np.ndarray, list[ActiveEntry]]] = None
    for sign in (1.0, -1.0):
        direction = np.zeros_like(U)
        direction[row] = sign * free[:, 0]
        try:
            step, newly_active = max_step(U, direction, Y, activity_tol, exclude=active.mask)
        except UnboundedStepError:
            continue
        moved = U + step * direction
        objective = log_abs_det(moved)
        score = -np.inf if objective is None else objective
        if best is None or score > best[0]:
            best = (score, moved, newly_active)
    if best is None:
        raise UnboundedStepError()
    return best[1], best[2]


def find_vertex(U0: np.ndarray, Y: np.ndarray, cfg: Optional[FindConfig] = None) -> FoundVertex:
    """Walk from a feasible U0 along projected gradients until n^2 independent constraints bind.

    Every step binds at least one constraint independent of the active set, so the walk ends
    within n^2 steps; the iteration cap only guards against numerical drift.
    """
    cfg = cfg or FindConfig()
    n = Y.shape[0]
    target = n * n
    cap = cfg.iteration_cap(n)
    U = np.array(U0, dtype=float, copy=True)
    active = _initial_active_set(U, Y, cfg.activity_tol)
    start = log_abs_det(U)
    objective_path = [start if start is not None else -np.inf]
    face_moves = 0

    for iteration in range(cap):
        if active.is_full_rank:
            return FoundVertex(
                U=U,
                active=active,
                iterations=iteration,
                rank=active.rank,
                face_moves=face_moves,
                objective_path=objective_path,
            )

        inv = inverse(U)
        if inv is None:
            raise SingularIterateError()
        gradient = inv.T
        direction = active.project(gradient)
        if np.linalg.norm(direction) <= cfg.stall_tol * max(1.0, float(np.linalg.norm(gradient))):
            logger.debug(
                "vertex_finding_face_move",
                extra={"rank": active.rank, "target": target, "iteration": iteration},
            )
            U, newly_active = _face_move(U, Y, active, cfg.activity_tol)
            face_moves += 1
        else:
            step, newly_active = max_step(U, direction, Y, cfg.activity_tol, exclude=active.mask)
            U = U + step * direction
        for row, column, sign in newly_active:
            active.add(row, column, sign)
        objective = log_abs_det(U)
        objective_path.append(objective if objective is not None else -np.inf)

    if active.is_full_rank:
        return FoundVertex(
            U=U,
            active=active,
            iterations=cap,
            rank=active.rank,
            face_moves=face_moves,
            objective_path=objective_path,
        )
    logger.debug("vertex_finding_capped", extra={"rank": active.rank, "cap": cap})
    raise VertexFindingStalledError(rank=active.rank, target=target, cap=cap)


@dataclass(frozen=True)
class EntryDistribution:
    plus_minus_one: float
    zero: float
    interior: float


def classify_entries(values: np.ndarray, tol: float = 1e-6) -> EntryDistribution:
    magnitudes = np.abs(np.asarray(values, dtype=float)).reshape(-1)
    total = magnitudes.size
    on_bound = np.abs(magnitudes - 1.0) <= tol
    at_zero = (magnitudes <= tol) & ~on_bound
    interior = ~(on_bound | at_zero)
    return EntryDistribution(
        plus_minus_one=float(on_bound.sum()) / total,
        zero=float(at_zero.sum()) / total,
        interior=float(interior.sum()) / total,
    )
