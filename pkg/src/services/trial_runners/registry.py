from __future__ import annotations

from src.services.trial_runners.base import TrialRunner
from src.services.trial_runners.internal_runners import (
    BerTrialRunner,
    EntryDistributionTrialRunner,
    MspTrialRunner,
    SuccessTrialRunner,
)


def build_default_runner_registry() -> dict[str, TrialRunner]:
    runners: list[TrialRunner] = [
        SuccessTrialRunner(),
        MspTrialRunner(),
        BerTrialRunner(),
        EntryDistributionTrialRunner(),
    ]
    return {runner.runner_key: runner for runner in runners}
