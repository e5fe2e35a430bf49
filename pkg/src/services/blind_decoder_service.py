from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.analytics.matrix_core import condition_number, inverse, rank, sign_pm
from src.analytics.vertex_finding import feasible_start, find_vertex
from src.analytics.vertex_hopping import partition_columns, search
from src.core.errors import InputError, SingularIterateError, SolverSignal
from src.models.decode import DecodeResult
from src.models.vertex import SearchOutcome
from src.schemas.solver import DecodeConfig, DecodeStats, FindConfig


def rounding_matrix(values: np.ndarray, epsilon: float) -> np.ndarray:
    """Offsets that snap entries within epsilon of -1, +1 or 0 onto those values."""
    if epsilon >= 0.5:
        raise InputError("epsilon must be below 0.5; rounding bins overlap otherwise")
    offsets = np.zeros_like(values, dtype=float)
    for target in (-1.0, 1.0, 0.0):
        near = np.abs(values - target) < epsilon
        offsets[near] = values[near] - target
    return offsets


@dataclass(frozen=True)
class RoundedVertex:
    U: np.ndarray
    Yhat: np.ndarray
    passes: int


def robust_find_vertex(
    Y: np.ndarray,
    epsilon: float,
    rng: np.random.Generator,
    cfg: Optional[FindConfig] = None,
) -> RoundedVertex:
    n = Y.shape[0]
    U = feasible_start(Y, rng)
    current = Y
    passes = 0
    for _ in range(n):
        found = find_vertex(U, current, cfg)
        passes += 1
        offsets = rounding_matrix(found.U @ current, epsilon)
        found_inv = inverse(found.U)
        if found_inv is None:
            raise SingularIterateError("Vertex-finding output is singular")
        settled = float(np.abs(found.U - U).max()) < epsilon
        U = found.U
        current = current - found_inv @ offsets
        if settled:
            break
    return RoundedVertex(U=U, Yhat=current, passes=passes)


VertexFinder = Callable[
    [np.ndarray, float, np.random.Generator, Optional[FindConfig]], RoundedVertex
]
VertexSearcher = Callable[..., SearchOutcome]


class BlindDecoderService:
    def __init__(
        self,
        config: Optional[DecodeConfig] = None,
        vertex_finder: VertexFinder | None = None,
        vertex_searcher: VertexSearcher | None = None,
    ) -> None:
        self.config = config or DecodeConfig.from_settings()
        self.vertex_finder = vertex_finder or robust_find_vertex
        self.vertex_searcher = vertex_searcher or search
        self.logger = logging.getLogger(__name__)

    @staticmethod
    def validate_observations(Y: np.ndarray) -> np.ndarray:
        values = np.asarray(Y, dtype=float)
        if values.ndim != 2:
            raise InputError("Observations must be a 2-D matrix")
        n, k = values.shape
        if n < 1 or k < n:
            raise InputError(f"Need k >= n >= 1 observations, got {n}x{k}")
        if not np.all(np.isfinite(values)):
            raise InputError("Observations contain NaN or Inf")
        if rank(values) < n:
            raise InputError("Observations are not full rank")
        return values

    def _epsilon_schedule(self) -> list[float]:
        schedule = [self.config.epsilon]
        if self.config.escalate_epsilon:
            schedule.extend(
                value for value in self.config.epsilon_grid if value > self.config.epsilon
            )
        return schedule

    def decode(self, Y: np.ndarray, rng: Optional[np.random.Generator] = None) -> DecodeResult:
        observations = self.validate_observations(Y)
        generator = rng if rng is not None else np.random.default_rng(self.config.seed)
        stats = DecodeStats()
        started = time.perf_counter()

        for epsilon in self._epsilon_schedule():
            stats.epsilon_used = epsilon
            result = self._decode_at_epsilon(observations, epsilon, generator, stats)
            if result is not None:
                stats.wall_time_seconds = time.perf_counter() - started
                return result
            if self.config.escalate_epsilon:
                self.logger.info("decode_epsilon_escalated", extra={"epsilon": epsilon})

        stats.wall_time_seconds = time.perf_counter() - started
        self.logger.info(
            "decode_outage",
            extra={
                "n": observations.shape[0],
                "k": observations.shape[1],
                "alg1Calls": stats.alg1_calls,
                "alg3Calls": stats.alg3_calls,
                "observationCondition": condition_number(observations),
            },
        )
        return DecodeResult(status="outage", stats=stats, message="Restart budget exhausted")

    def _decode_at_epsilon(
        self,
        Y: np.ndarray,
        epsilon: float,
        rng: np.random.Generator,
        stats: DecodeStats,
    ) -> Optional[DecodeResult]:
        for restart in range(self.config.max_restarts):
            found = self._find_basis(Y, epsilon, rng, stats)
            if found is None:
                stats.restarts += 1
                continue
            vertex, partition = found

            stats.alg3_calls += 1
            search_started = time.perf_counter()
            outcome = self.vertex_searcher(
                vertex.U, vertex.Yhat, self.config.search, partition=partition
            )
            stats.search_seconds += time.perf_counter() - search_started
            stats.hops += outcome.hops
            stats.vertices_visited += outcome.visited
            stats.backtracks += outcome.backtracks

            if outcome.status == "global_optimum" and outcome.state is not None:
                return DecodeResult(
                    status="success",
                    Xhat=sign_pm(outcome.state.U @ Y),
                    U=outcome.state.U,
                    stats=stats,
                )

            if outcome.status == "trap":
                stats.traps += 1
            elif outcome.status == "visit_limit":
                stats.visit_limits += 1
            if outcome.suspected_false_trap:
                stats.suspected_false_traps += 1
            self.logger.debug(
                "decode_restart",
                extra={"restart": restart, "status": outcome.status, "visited": outcome.visited},
            )
            stats.restarts += 1
        return None

    def _find_basis(self, Y, epsilon, rng, stats):  # type: ignore[no-untyped-def]
        for _ in range(self.config.max_find_attempts):
            stats.alg1_calls += 1
            find_started = time.perf_counter()
            try:
                vertex = self.vertex_finder(Y, epsilon, rng, self.config.find)
                stats.rounding_passes += vertex.passes
                partition = partition_columns(
                    vertex.U, vertex.Yhat, self.config.search.partition_tol
                )
            except SolverSignal as exc:
                self.logger.debug("vertex_finding_retry", extra={"code": exc.code})
                continue
            finally:
                stats.find_seconds += time.perf_counter() - find_started
            return vertex, partition
        return None
