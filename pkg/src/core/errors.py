from __future__ import annotations

import json
from typing import Any

from pydantic import BaseModel

from src.core.trial_context import get_trial_id


class ErrorDetail(BaseModel):
    code: str
    message: str
    details: dict[str, Any] | None = None


class ErrorEnvelope(BaseModel):
    error: ErrorDetail


class BlindHopError(Exception):
    def __init__(self, code: str, message: str, exit_code: int = 1) -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.exit_code = exit_code


class InputError(BlindHopError):
    def __init__(self, message: str = "Bad input") -> None:
        super().__init__(code="bad_input", message=message, exit_code=1)


class UnsupportedDimensionError(BlindHopError):
    def __init__(self, n: int, what: str = "spectrum table") -> None:
        super().__init__(
            code="unsupported_n",
            message=f"No {what} entry for n={n}",
            exit_code=1,
        )
        self.n = n


class SingularMatrixError(BlindHopError):
    def __init__(self, message: str = "Matrix is singular") -> None:
        super().__init__(code="singular", message=message, exit_code=1)


class SolverSignal(BlindHopError):
    """Recoverable solver outcome; the decoder restarts on it."""


class VertexFindingStalledError(SolverSignal):
    def __init__(self, rank: int, target: int, cap: int) -> None:
        super().__init__(
            code="stalled",
            message=f"Iteration cap {cap} reached with active rank {rank} of {target}",
        )
        self.rank = rank
        self.target = target
        self.cap = cap


class SingularIterateError(SolverSignal):
    def __init__(self, message: str = "Vertex-finding iterate became singular") -> None:
        super().__init__(code="singular_iterate", message=message)


class UnboundedStepError(SolverSignal):
    def __init__(self, message: str = "No constraint limits the step along the search ray") -> None:
        super().__init__(code="unbounded_step", message=message)


class RankDeficientError(SolverSignal):
    def __init__(self, rank: int, n: int) -> None:
        super().__init__(
            code="rank_deficient",
            message=f"Good columns span rank {rank}, need {n}",
        )
        self.rank = rank
        self.n = n


def error_envelope_json(exc: BlindHopError) -> str:
    trial_id = get_trial_id()
    details = {"trialId": trial_id} if trial_id else None
    envelope = ErrorEnvelope(error=ErrorDetail(code=exc.code, message=exc.message, details=details))
    return json.dumps(envelope.model_dump(exclude_none=True))
