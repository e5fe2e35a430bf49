from __future__ import annotations

import logging
from collections import defaultdict
from statistics import fmean
from typing import Callable, Optional, Sequence

from src.core.errors import InputError
from src.schemas.bench import (
    BerSweepRow,
    ChannelDistributionName,
    EntryDistributionRow,
    MspTableRow,
    SuccessTableRow,
    TrialRecord,
    TrialTask,
)
from src.schemas.solver import DecodeConfig
from src.services.trial_runners.pool import run_trials

MSP_THRESHOLDS = (0.90, 0.99)
ERASURE_BER = 0.5

TrialExecutor = Callable[..., list[TrialRecord]]


def _mean(values: Sequence[float]) -> float:
    return fmean(values) if values else 0.0


def _recovered(record: TrialRecord) -> bool:
    return record.status == "success" and record.ber == 0.0


def _erasure_ber(record: TrialRecord) -> float:
    # Outages count as coin-flip decisions.
    return (record.ber or 0.0) if record.status == "success" else ERASURE_BER


class BenchService:
    def __init__(
        self,
        decode_config: Optional[DecodeConfig] = None,
        *,
        threads: int = 1,
        log_level: str = "WARNING",
        msp_exhaustive_limit: int = 500_000,
        msp_random_budget: int = 200_000,
        executor: TrialExecutor | None = None,
    ) -> None:
        self.decode_config = decode_config or DecodeConfig.from_settings()
        self.threads = threads
        self.log_level = log_level
        self.msp_exhaustive_limit = msp_exhaustive_limit
        self.msp_random_budget = msp_random_budget
        self.executor = executor or run_trials
        self.logger = logging.getLogger(__name__)

    def _run(self, tasks: list[TrialTask]) -> list[TrialRecord]:
        return self.executor(tasks, threads=self.threads, log_level=self.log_level)

    @staticmethod
    def _check_trials(trials: int) -> None:
        if trials < 1:
            raise InputError("trials must be at least 1")

    def success_table(
        self, cases: Sequence[tuple[int, int]], trials: int, seed: int
    ) -> tuple[list[SuccessTableRow], list[TrialRecord]]:
        self._check_trials(trials)
        for n, k in cases:
            if k < n:
                raise InputError(f"Case {n}:{k} needs k >= n")
        tasks = [
            TrialTask(
                command="table1",
                master_seed=seed,
                n=n,
                k=k,
                cell=cell,
                trial=trial,
                decode=self.decode_config,
            )
            for cell, (n, k) in enumerate(cases)
            for trial in range(trials)
        ]
        records = self._run(tasks)

        by_case: dict[tuple[int, int], list[TrialRecord]] = defaultdict(list)
        for record in records:
            by_case[(record.n, record.k)].append(record)

        rows: list[SuccessTableRow] = []
        for n, k in cases:
            cell_records = by_case[(n, k)]
            alg1_calls = sum(record.alg1_calls or 0 for record in cell_records)
            alg3_calls = sum(record.alg3_calls or 0 for record in cell_records)
            alg1_seconds = sum(record.alg1_seconds or 0.0 for record in cell_records)
            alg3_seconds = sum(record.alg3_seconds or 0.0 for record in cell_records)
            rows.append(
                SuccessTableRow(
                    n=n,
                    k=k,
                    trials=len(cell_records),
                    success_probability=_mean(
                        [1.0 if _recovered(record) else 0.0 for record in cell_records]
                    ),
                    mean_alg1_calls=alg1_calls / len(cell_records),
                    mean_alg3_calls=alg3_calls / len(cell_records),
                    mean_hops=_mean([float(record.hops or 0) for record in cell_records]),
                    mean_vertices_visited=_mean(
                        [float(record.vertices_visited or 0) for record in cell_records]
                    ),
                    mean_wall_time_seconds=_mean(
                        [record.wall_time_seconds or 0.0 for record in cell_records]
                    ),
                    mean_alg1_seconds_per_call=alg1_seconds / alg1_calls if alg1_calls else 0.0,
                    mean_alg3_seconds_per_call=alg3_seconds / alg3_calls if alg3_calls else 0.0,
                )
            )
            self.logger.info(
                "success_table_cell",
                extra={"n": n, "k": k, "successProbability": rows[-1].success_probability},
            )
        return rows, records

    def msp_table(
        self, ns: Sequence[int], kmax: int, trials: int, seed: int
    ) -> tuple[list[MspTableRow], dict[int, dict[str, Optional[int]]], list[TrialRecord]]:
        self._check_trials(trials)
        for n in ns:
            if kmax < n:
                raise InputError(f"kmax must be at least n={n}")
        tasks = [
            TrialTask(
                command="msp",
                master_seed=seed,
                n=n,
                k=kmax,
                kmax=kmax,
                cell=cell,
                trial=trial,
                msp_exhaustive_limit=self.msp_exhaustive_limit,
                msp_random_budget=self.msp_random_budget,
            )
            for cell, n in enumerate(ns)
            for trial in range(trials)
        ]
        records = self._run(tasks)

        rows: list[MspTableRow] = []
        thresholds: dict[int, dict[str, Optional[int]]] = {}
        for n in ns:
            cell_records = [record for record in records if record.n == n]
            exhaustive = all(record.msp_exhaustive is not False for record in cell_records)
            reached: dict[str, Optional[int]] = {f"{level:.2f}": None for level in MSP_THRESHOLDS}
            for k in range(n, kmax + 1):
                hits = sum(
                    1 for record in cell_records if record.msp_k is not None and record.msp_k <= k
                )
                probability = hits / len(cell_records)
                rows.append(
                    MspTableRow(
                        n=n, k=k, trials=len(cell_records), msp_probability=probability,
                        exhaustive=exhaustive,
                    )
                )
                for level in MSP_THRESHOLDS:
                    label = f"{level:.2f}"
                    if reached[label] is None and probability >= level:
                        reached[label] = k
            thresholds[n] = reached
        return rows, thresholds, records

    def ber_sweep(
        self,
        n: int,
        k: int,
        snrs_db: Sequence[float],
        epsilons: Sequence[float],
        decoders: Sequence[str],
        trials: int,
        seed: int,
        distribution: ChannelDistributionName = "gaussian",
    ) -> tuple[list[BerSweepRow], list[TrialRecord]]:
        self._check_trials(trials)
        if k < n:
            raise InputError("k must be at least n")
        tasks = [
            TrialTask(
                command="ber",
                master_seed=seed,
                n=n,
                k=k,
                cell=cell,
                trial=trial,
                snr_db=snr_db,
                distribution=distribution,
                epsilons=list(epsilons),
                decoders=list(decoders),
                decode=self.decode_config,
            )
            for cell, snr_db in enumerate(snrs_db)
            for trial in range(trials)
        ]
        records = self._run(tasks)

        groups: dict[tuple[float, str, Optional[float]], list[TrialRecord]] = defaultdict(list)
        for record in records:
            groups[(float(record.snr_db or 0.0), record.decoder, record.epsilon)].append(record)

        rows: list[BerSweepRow] = []
        for snr_db in snrs_db:
            for decoder in decoders:
                for epsilon in epsilons if decoder == "vh" else [None]:
                    group = groups[(float(snr_db), decoder, epsilon)]
                    if not group:
                        continue
                    completed = [record for record in group if record.status == "success"]
                    completion = len(completed) / len(group)
                    rows.append(
                        BerSweepRow(
                            n=n,
                            k=k,
                            distribution=distribution,
                            snr_db=snr_db,
                            decoder=decoder,
                            epsilon=epsilon,
                            trials=len(group),
                            ber=_mean([record.ber or 0.0 for record in completed])
                            if completed
                            else None,
                            ber_erasure=_mean(
                                [_erasure_ber(record) for record in group]
                            ),
                            completion_probability=completion,
                            outage_rate=1.0 - completion,
                            mean_condition_number=_mean(
                                [record.condition_number or 0.0 for record in group]
                            ),
                        )
                    )
        return rows, records

    def entry_distribution(
        self, n: int, ks: Sequence[int], trials: int, seed: int
    ) -> tuple[list[EntryDistributionRow], list[TrialRecord]]:
        self._check_trials(trials)
        for k in ks:
            if k < n:
                raise InputError(f"k={k} must be at least n={n}")
        tasks = [
            TrialTask(
                command="dist",
                master_seed=seed,
                n=n,
                k=k,
                cell=cell,
                trial=trial,
                decode=self.decode_config,
            )
            for cell, k in enumerate(ks)
            for trial in range(trials)
        ]
        records = self._run(tasks)

        rows: list[EntryDistributionRow] = []
        for k in ks:
            cell_records = [record for record in records if record.k == k]
            found = [record for record in cell_records if record.status == "found"]
            rows.append(
                EntryDistributionRow(
                    n=n,
                    k=k,
                    trials=len(cell_records),
                    stalled=len(cell_records) - len(found),
                    plus_minus_fraction=_mean([r.plus_minus_fraction or 0.0 for r in found])
                    if found
                    else None,
                    zero_fraction=_mean([r.zero_fraction or 0.0 for r in found]) if found else None,
                    interior_fraction=_mean([r.interior_fraction or 0.0 for r in found])
                    if found
                    else None,
                )
            )
        return rows, records
