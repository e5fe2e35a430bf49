from __future__ import annotations

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Ignore unrelated env keys so a shared .env can carry other tools' settings.
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="BLINDHOP_",
        extra="ignore",
    )

    app_name: str = "blindhop"
    environment: str = "development"
    log_level: str = "INFO"

    activity_tol: float = Field(default=1e-9, gt=0.0, le=1e-3)
    feas_tol: float = Field(default=1e-7, gt=0.0, le=1e-2)
    partition_tol: float = Field(default=1e-7, gt=0.0, le=1e-2)
    basis_search_limit: int = Field(default=100_000, ge=0)
    stall_tol: float = Field(default=1e-12, gt=0.0, le=1e-3)
    max_find_iters: int = Field(default=0, ge=0, le=100000)

    epsilon: float = Field(default=0.05, ge=0.0)
    epsilon_grid: str = "0.01,0.02,0.05,0.1"
    escalate_epsilon: bool = False
    max_restarts: int = Field(default=10, ge=1, le=10000)
    max_find_attempts: int = Field(default=25, ge=1, le=10000)

    msp_exhaustive_limit: int = Field(default=500_000, ge=1)
    msp_random_budget: int = Field(default=200_000, ge=1)

    threads: int = Field(default=1, ge=1, le=512)


@lru_cache
def get_settings() -> Settings:
    return Settings()


def parse_epsilon_grid(raw: str) -> list[float]:
    values: list[float] = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            values.append(float(part))
        except ValueError as exc:
            raise ValueError(f"Unparsable epsilon grid entry: {part!r}") from exc
    return sorted(set(values))


def get_epsilon_grid() -> list[float]:
    return parse_epsilon_grid(get_settings().epsilon_grid)


def validate_runtime_settings() -> None:
    settings = get_settings()
    if not 0.0 <= settings.epsilon < 0.5:
        raise ValueError("BLINDHOP_EPSILON must lie in [0, 0.5); rounding bins overlap otherwise")
    grid = parse_epsilon_grid(settings.epsilon_grid)
    if not grid:
        raise ValueError("BLINDHOP_EPSILON_GRID must list at least one value")
    out_of_range = [value for value in grid if not 0.0 <= value < 0.5]
    if out_of_range:
        raise ValueError(
            "BLINDHOP_EPSILON_GRID values must lie in [0, 0.5): "
            + ", ".join(str(value) for value in out_of_range)
        )
    if settings.activity_tol >= settings.feas_tol * 10:
        raise ValueError("BLINDHOP_ACTIVITY_TOL must stay well below BLINDHOP_FEAS_TOL")
