from __future__ import annotations

from typing import Literal, Optional

from pydantic import Field, field_validator

from src.core.config import Settings, get_settings, parse_epsilon_grid
from src.shared.base import BaseSchema

SearchStatus = Literal["global_optimum", "trap", "visit_limit", "error"]
DecodeStatus = Literal["success", "outage", "error"]


class FindConfig(BaseSchema):
    activity_tol: float = Field(default=1e-9, gt=0.0)
    stall_tol: float = Field(default=1e-12, gt=0.0)
    max_iters: int = Field(default=0, ge=0)

    def iteration_cap(self, n: int) -> int:
        return self.max_iters if self.max_iters > 0 else 4 * n * n + 8

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None) -> "FindConfig":
        settings = settings or get_settings()
        return cls(
            activity_tol=settings.activity_tol,
            stall_tol=settings.stall_tol,
            max_iters=settings.max_find_iters,
        )


class SearchConfig(BaseSchema):
    feas_tol: float = Field(default=1e-7, gt=0.0)
    partition_tol: float = Field(default=1e-7, gt=0.0)
    max_vertices: int = Field(default=0, ge=0)
    use_spectrum_certificate: bool = True
    basis_search_limit: int = Field(default=100_000, ge=0)

    def vertex_limit(self, n: int, k: int) -> int:
        return self.max_vertices if self.max_vertices > 0 else 2 * n * k

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None) -> "SearchConfig":
        settings = settings or get_settings()
        return cls(
            feas_tol=settings.feas_tol,
            partition_tol=settings.partition_tol,
            basis_search_limit=settings.basis_search_limit,
        )


class DecodeConfig(BaseSchema):
    epsilon: float = Field(default=0.05, ge=0.0)
    max_restarts: int = Field(default=10, ge=1)
    max_find_attempts: int = Field(default=25, ge=1)
    escalate_epsilon: bool = False
    seed: Optional[int] = None
    epsilon_grid: list[float] = Field(default_factory=lambda: [0.01, 0.02, 0.05, 0.1])
    find: FindConfig = Field(default_factory=FindConfig)
    search: SearchConfig = Field(default_factory=SearchConfig)

    @field_validator("epsilon")
    @classmethod
    def _reject_overlapping_bins(cls, value: float) -> float:
        if value >= 0.5:
            raise ValueError("epsilon must be below 0.5; rounding bins overlap otherwise")
        return value

    @classmethod
    def from_settings(
        cls, settings: Optional[Settings] = None, **overrides: object
    ) -> "DecodeConfig":
        settings = settings or get_settings()
        values: dict[str, object] = {
            "epsilon": settings.epsilon,
            "max_restarts": settings.max_restarts,
            "max_find_attempts": settings.max_find_attempts,
            "escalate_epsilon": settings.escalate_epsilon,
            "epsilon_grid": parse_epsilon_grid(settings.epsilon_grid),
            "find": FindConfig.from_settings(settings),
            "search": SearchConfig.from_settings(settings),
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls.model_validate(values)


class DecodeStats(BaseSchema):
    restarts: int = 0
    alg1_calls: int = 0
    alg3_calls: int = 0
    hops: int = 0
    vertices_visited: int = 0
    backtracks: int = 0
    traps: int = 0
    visit_limits: int = 0
    suspected_false_traps: int = 0
    rounding_passes: int = 0
    epsilon_used: float | None = None
    find_seconds: float = 0.0
    search_seconds: float = 0.0
    wall_time_seconds: float = 0.0
