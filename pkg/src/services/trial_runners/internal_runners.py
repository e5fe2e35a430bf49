from __future__ import annotations

import logging
import time
from typing import Optional

import numpy as np

from src.analytics.baselines import ber, imperfect_csi, ml_decode, zero_forcing
from src.analytics.channel_model import check_msp, draw_symbols, sample_instance
from src.analytics.matrix_core import condition_number, rank
from src.analytics.vertex_finding import classify_entries, feasible_start, find_vertex
from src.core.errors import InputError, SolverSignal
from src.models.channel import ChannelInstance
from src.schemas.bench import TrialRecord, TrialTask
from src.services.blind_decoder_service import BlindDecoderService
from src.services.trial_runners.base import (
    CHANNEL_STREAM,
    CSI_ERROR_STREAM,
    DECODER_STREAM,
    trial_rng,
)

logger = logging.getLogger(__name__)


def _instance(task: TrialTask) -> ChannelInstance:
    return sample_instance(
        task.n,
        task.k,
        trial_rng(task, CHANNEL_STREAM),
        snr_db=task.snr_db,
        distribution=task.distribution,
        seed=task.context.entropy,
    )


def _blind_record(
    task: TrialTask,
    instance: ChannelInstance,
    kappa: float,
    epsilon: float,
) -> TrialRecord:
    base = {
        "command": task.command,
        "trial": task.trial,
        "n": task.n,
        "k": task.k,
        "decoder": "vh",
        "distribution": task.distribution,
        "snr_db": task.snr_db,
        "sigma": instance.sigma,
        "epsilon": epsilon,
        "seed": task.seed_label,
        "condition_number": kappa,
    }
    observed_rank = rank(instance.Y)
    if observed_rank < task.n:
        # Repeated symbol rows leave Y rank deficient; no row transform can separate them.
        logger.info("trial_rank_deficient", extra={"rank": observed_rank, "n": task.n})
        return TrialRecord(**base, status="outage")

    config = task.decode.model_copy(update={"epsilon": epsilon})
    result = BlindDecoderService(config).decode(instance.Y, trial_rng(task, DECODER_STREAM))
    stats = result.stats
    return TrialRecord(
        **base,
        status=result.status,
        ber=ber(instance.X, result.Xhat) if result.Xhat is not None else None,
        hops=stats.hops,
        alg1_calls=stats.alg1_calls,
        alg3_calls=stats.alg3_calls,
        vertices_visited=stats.vertices_visited,
        traps=stats.traps,
        visit_limits=stats.visit_limits,
        suspected_false_traps=stats.suspected_false_traps,
        wall_time_seconds=stats.wall_time_seconds,
        alg1_seconds=stats.find_seconds,
        alg3_seconds=stats.search_seconds,
    )


class SuccessTrialRunner:
    runner_key = "table1"

    def run(self, task: TrialTask) -> list[TrialRecord]:
        instance = _instance(task.model_copy(update={"snr_db": None}))
        return [_blind_record(task, instance, condition_number(instance.A), task.decode.epsilon)]


class BerTrialRunner:
    runner_key = "ber"

    def run(self, task: TrialTask) -> list[TrialRecord]:
        if task.snr_db is None:
            raise InputError("BER trials need an SNR")
        instance = _instance(task)
        kappa = condition_number(instance.A)
        records: list[TrialRecord] = []
        for decoder in task.decoders:
            if decoder == "vh":
                records.extend(
                    _blind_record(task, instance, kappa, epsilon) for epsilon in task.epsilons
                )
                continue
            started = time.perf_counter()
            estimate = self._baseline(decoder, instance, task)
            records.append(
                TrialRecord(
                    command=task.command,
                    trial=task.trial,
                    n=task.n,
                    k=task.k,
                    decoder=decoder,
                    distribution=task.distribution,
                    snr_db=task.snr_db,
                    sigma=instance.sigma,
                    seed=task.seed_label,
                    status="success",
                    ber=ber(instance.X, estimate),
                    condition_number=kappa,
                    wall_time_seconds=time.perf_counter() - started,
                )
            )
        return records

    @staticmethod
    def _baseline(decoder: str, instance: ChannelInstance, task: TrialTask) -> np.ndarray:
        if decoder == "zf":
            return zero_forcing(instance.Y, instance.A)
        if decoder.startswith("ml"):
            rho = parse_ml_rho(decoder)
            error_rng = trial_rng(task, CSI_ERROR_STREAM)
            estimate = imperfect_csi(instance.A, instance.sigma, rho, error_rng)
            return ml_decode(instance.Y, estimate)
        raise InputError(f"Unknown decoder: {decoder}")


def parse_ml_rho(decoder: str) -> float:
    _, _, raw = decoder.partition(":")
    if not raw:
        return 0.0
    try:
        rho = float(raw)
    except ValueError as exc:
        raise InputError(f"Bad ML error ratio in {decoder!r}") from exc
    if rho < 0:
        raise InputError("ML error ratio must be non-negative")
    return rho


class MspTrialRunner:
    runner_key = "msp"

    def run(self, task: TrialTask) -> list[TrialRecord]:
        kmax = task.kmax or task.k
        symbols = draw_symbols(task.n, kmax, trial_rng(task, CHANNEL_STREAM))
        smallest, exhaustive = self._smallest_msp_prefix(symbols, task)
        return [
            TrialRecord(
                command=task.command,
                trial=task.trial,
                n=task.n,
                k=kmax,
                seed=task.seed_label,
                status="msp" if smallest is not None else "none",
                msp_k=smallest,
                msp_exhaustive=exhaustive,
            )
        ]

    @staticmethod
    def _smallest_msp_prefix(symbols: np.ndarray, task: TrialTask) -> tuple[Optional[int], bool]:
        n, kmax = symbols.shape
        rng = trial_rng(task, DECODER_STREAM)
        exhaustive = True

        def prefix_has_msp(k: int) -> bool:
            nonlocal exhaustive
            check = check_msp(
                symbols[:, :k],
                exhaustive_limit=task.msp_exhaustive_limit,
                random_budget=task.msp_random_budget,
                rng=rng,
            )
            exhaustive = exhaustive and check.exhaustive
            return check.has_msp

        if not prefix_has_msp(kmax):
            return None, exhaustive
        low, high = n, kmax
        while low < high:
            middle = (low + high) // 2
            if prefix_has_msp(middle):
                high = middle
            else:
                low = middle + 1
        return low, exhaustive


class EntryDistributionTrialRunner:
    runner_key = "dist"

    def run(self, task: TrialTask) -> list[TrialRecord]:
        instance = _instance(task.model_copy(update={"snr_db": None}))
        base = {
            "command": task.command,
            "trial": task.trial,
            "n": task.n,
            "k": task.k,
            "seed": task.seed_label,
        }
        if rank(instance.Y) < task.n:
            return [TrialRecord(**base, status="rank_deficient")]
        started = time.perf_counter()
        try:
            start = feasible_start(instance.Y, trial_rng(task, DECODER_STREAM))
            found = find_vertex(start, instance.Y, task.decode.find)
        except SolverSignal as exc:
            return [TrialRecord(**base, status=exc.code)]
        distribution = classify_entries(found.U @ instance.Y)
        return [
            TrialRecord(
                **base,
                status="found",
                plus_minus_fraction=distribution.plus_minus_one,
                zero_fraction=distribution.zero,
                interior_fraction=distribution.interior,
                wall_time_seconds=time.perf_counter() - started,
            )
        ]
