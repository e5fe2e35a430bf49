from __future__ import annotations

from typing import Literal, Optional

from pydantic import Field

from src.core.trial_context import TrialContext
from src.schemas.solver import DecodeConfig
from src.shared.base import BaseSchema

BenchCommand = Literal["table1", "msp", "ber", "dist"]
ChannelDistributionName = Literal["gaussian", "rayleigh"]

TRIAL_SCHEMA_VERSION = "trial-record/1"
TIMING_COLUMNS = frozenset(
    {
        "wall_time_seconds",
        "alg1_seconds",
        "alg3_seconds",
        "mean_wall_time_seconds",
        "mean_alg1_seconds_per_call",
        "mean_alg3_seconds_per_call",
    }
)


class TrialTask(BaseSchema):
    command: BenchCommand
    master_seed: int = Field(ge=0)
    n: int = Field(ge=1)
    k: int = Field(ge=1)
    cell: int = Field(default=0, ge=0)
    trial: int = Field(ge=0)
    snr_db: Optional[float] = None
    distribution: ChannelDistributionName = "gaussian"
    epsilons: list[float] = Field(default_factory=lambda: [0.05])
    decoders: list[str] = Field(default_factory=lambda: ["vh"])
    kmax: Optional[int] = None
    msp_exhaustive_limit: int = 500_000
    msp_random_budget: int = 200_000
    decode: DecodeConfig = Field(default_factory=DecodeConfig)

    @property
    def context(self) -> TrialContext:
        return TrialContext(
            master_seed=self.master_seed, n=self.n, k=self.k, cell=self.cell, trial=self.trial
        )

    @property
    def seed_label(self) -> str:
        return self.context.label


class TrialRecord(BaseSchema):
    command: BenchCommand
    trial: int
    n: int
    k: int
    decoder: str = ""
    distribution: str = "gaussian"
    snr_db: Optional[float] = None
    sigma: Optional[float] = None
    epsilon: Optional[float] = None
    seed: str = ""
    status: str
    ber: Optional[float] = None
    hops: Optional[int] = None
    alg1_calls: Optional[int] = None
    alg3_calls: Optional[int] = None
    vertices_visited: Optional[int] = None
    traps: Optional[int] = None
    visit_limits: Optional[int] = None
    suspected_false_traps: Optional[int] = None
    condition_number: Optional[float] = None
    msp_k: Optional[int] = None
    msp_exhaustive: Optional[bool] = None
    plus_minus_fraction: Optional[float] = None
    zero_fraction: Optional[float] = None
    interior_fraction: Optional[float] = None
    wall_time_seconds: Optional[float] = None
    alg1_seconds: Optional[float] = None
    alg3_seconds: Optional[float] = None


class SuccessTableRow(BaseSchema):
    n: int
    k: int
    trials: int
    success_probability: float
    mean_alg1_calls: float
    mean_alg3_calls: float
    mean_hops: float
    mean_vertices_visited: float
    mean_wall_time_seconds: float
    mean_alg1_seconds_per_call: float
    mean_alg3_seconds_per_call: float


class MspTableRow(BaseSchema):
    n: int
    k: int
    trials: int
    msp_probability: float
    exhaustive: bool


class BerSweepRow(BaseSchema):
    n: int
    k: int
    distribution: str
    snr_db: float
    decoder: str
    epsilon: Optional[float] = None
    trials: int
    ber: Optional[float] = None
    ber_erasure: float
    completion_probability: float
    outage_rate: float
    mean_condition_number: float


class EntryDistributionRow(BaseSchema):
    n: int
    k: int
    trials: int
    stalled: int
    plus_minus_fraction: Optional[float] = None
    zero_fraction: Optional[float] = None
    interior_fraction: Optional[float] = None


class DecodeSummary(BaseSchema):
    status: str
    n: int
    k: int
    epsilon: float
    seed: Optional[int] = None
    restarts: int
    alg1_calls: int
    alg3_calls: int
    hops: int
    vertices_visited: int
    wall_time_seconds: float
    output: Optional[str] = None
