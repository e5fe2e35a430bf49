from __future__ import annotations

import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from src.core.logging import configure_logging
from src.core.trial_context import trial_scope
from src.schemas.bench import TrialRecord, TrialTask
from src.services.trial_runners.base import TrialRunner
from src.services.trial_runners.registry import build_default_runner_registry

logger = logging.getLogger(__name__)

_worker_registry: Optional[dict[str, TrialRunner]] = None


def _init_worker(log_level: str) -> None:
    global _worker_registry
    configure_logging(log_level, stream=sys.stderr)
    _worker_registry = build_default_runner_registry()


def _run_in_worker(task: TrialTask) -> list[TrialRecord]:
    registry = _worker_registry or build_default_runner_registry()
    with trial_scope(task.context):
        return registry[task.command].run(task)


def run_trials(
    tasks: Sequence[TrialTask],
    *,
    threads: int = 1,
    log_level: str = "WARNING",
    registry: Optional[dict[str, TrialRunner]] = None,
) -> list[TrialRecord]:
    """Run trials and return their records in task order, whatever the worker count."""
    if not tasks:
        return []
    if threads <= 1:
        runners = registry or build_default_runner_registry()
        records: list[TrialRecord] = []
        for task in tasks:
            with trial_scope(task.context):
                records.extend(runners[task.command].run(task))
        return records

    chunksize = max(1, len(tasks) // (threads * 8))
    logger.info("trial_pool_started", extra={"workers": threads, "tasks": len(tasks)})
    with ProcessPoolExecutor(
        max_workers=threads, initializer=_init_worker, initargs=(log_level,)
    ) as executor:
        batches = executor.map(_run_in_worker, tasks, chunksize=chunksize)
        return [record for batch in batches for record in batch]
