from __future__ import annotations

from typing import Protocol

import numpy as np

from src.schemas.bench import TrialRecord, TrialTask

CHANNEL_STREAM = 0
DECODER_STREAM = 1
CSI_ERROR_STREAM = 2


def trial_rng(task: TrialTask, stream: int) -> np.random.Generator:
    return task.context.rng(stream)


class TrialRunner(Protocol):
    runner_key: str

    def run(self, task: TrialTask) -> list[TrialRecord]:
        ...
