from __future__ import annotations

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Iterator

import numpy as np


@dataclass(frozen=True)
class TrialContext:
    """Identity of one Monte Carlo trial; all of its random streams derive from it."""

    master_seed: int
    n: int
    k: int
    cell: int
    trial: int

    @property
    def label(self) -> str:
        return f"{self.master_seed}:{self.n}:{self.k}:{self.cell}:{self.trial}"

    @property
    def entropy(self) -> tuple[int, int, int, int, int]:
        return (self.master_seed, self.n, self.k, self.cell, self.trial)

    def rng(self, stream: int) -> np.random.Generator:
        """PCG64 stream keyed by the trial identity and stream index, never by worker."""
        return np.random.default_rng(np.random.SeedSequence([*self.entropy, stream]))


_trial_ctx_var: ContextVar[TrialContext | None] = ContextVar("trial_context", default=None)


def get_trial_context() -> TrialContext | None:
    return _trial_ctx_var.get()


def get_trial_id() -> str | None:
    context = _trial_ctx_var.get()
    return context.label if context is not None else None


@contextmanager
def trial_scope(context: TrialContext) -> Iterator[TrialContext]:
    """Bind `context` for logs and error envelopes until the block exits."""
    token = _trial_ctx_var.set(context)
    try:
        yield context
    finally:
        _trial_ctx_var.reset(token)
