from __future__ import annotations

from typing import Any

import numpy as np
import pytest

from src.core.errors import InputError
from src.models.channel import ChannelInstance
from src.models.decode import DecodeResult
from src.schemas.bench import TrialRecord, TrialTask
from src.schemas.solver import DecodeConfig, DecodeStats
from src.services.bench_service import BenchService
from src.services.trial_runners import build_default_runner_registry, internal_runners
from src.services.trial_runners.base import CHANNEL_STREAM, trial_rng
from src.services.trial_runners.internal_runners import (
    EntryDistributionTrialRunner,
    SuccessTrialRunner,
    parse_ml_rho,
)
from src.services.trial_runners.pool import run_trials


class StubExecutor:
    """Answers every task with scripted records so aggregation can be checked by hand."""

    def __init__(self, answer) -> None:  # type: ignore[no-untyped-def]
        self.answer = answer
        self.tasks: list[TrialTask] = []
        self.options: dict[str, Any] = {}

    def __call__(self, tasks: list[TrialTask], **options: Any) -> list[TrialRecord]:
        self.tasks = list(tasks)
        self.options = options
        records: list[TrialRecord] = []
        for task in tasks:
            records.extend(self.answer(task))
        return records


def _service(executor: StubExecutor, **kwargs: Any) -> BenchService:
    return BenchService(DecodeConfig(seed=0), executor=executor, **kwargs)


def test_success_table_aggregates_per_case() -> None:
    def answer(task: TrialTask) -> list[TrialRecord]:
        status = "success" if task.trial % 2 == 0 else "outage"
        return [
            TrialRecord(
                command="table1",
                trial=task.trial,
                n=task.n,
                k=task.k,
                decoder="vh",
                status=status,
                ber=0.0 if status == "success" else None,
                hops=task.trial,
                alg1_calls=2,
                alg3_calls=1,
                vertices_visited=3,
                wall_time_seconds=0.5,
                alg1_seconds=0.2,
                alg3_seconds=0.1,
            )
        ]

    executor = StubExecutor(answer)
    rows, records = _service(executor, threads=3).success_table([(2, 8), (3, 13)], 4, seed=9)

    assert len(executor.tasks) == 8
    assert executor.options["threads"] == 3
    assert [task.cell for task in executor.tasks[:4]] == [0, 0, 0, 0]
    assert len(records) == 8
    first = rows[0]
    assert (first.n, first.k, first.trials) == (2, 8, 4)
    assert first.success_probability == 0.5
    assert first.mean_alg1_calls == 2.0
    assert first.mean_hops == pytest.approx(1.5)
    assert first.mean_alg1_seconds_per_call == pytest.approx(0.1)
    assert first.mean_alg3_seconds_per_call == pytest.approx(0.1)


def test_success_needs_exact_recovery_not_just_a_success_status() -> None:
    def answer(task: TrialTask) -> list[TrialRecord]:
        return [
            TrialRecord(
                command="table1",
                trial=task.trial,
                n=task.n,
                k=task.k,
                status="success",
                ber=0.0 if task.trial < 3 else 0.125,
            )
        ]

    rows, _ = _service(StubExecutor(answer)).success_table([(2, 8)], 4, seed=0)

    assert rows[0].success_probability == pytest.approx(0.75)


def test_success_table_rejects_bad_cases() -> None:
    service = _service(StubExecutor(lambda task: []))
    with pytest.raises(InputError):
        service.success_table([(4, 3)], 5, seed=0)
    with pytest.raises(InputError):
        service.success_table([(2, 8)], 0, seed=0)


def test_msp_table_builds_cumulative_curve_and_thresholds() -> None:
    smallest = {0: 2, 1: 3, 2: 3, 3: None}

    def answer(task: TrialTask) -> list[TrialRecord]:
        return [
            TrialRecord(
                command="msp",
                trial=task.trial,
                n=task.n,
                k=task.k,
                status="msp" if smallest[task.trial] else "none",
                msp_k=smallest[task.trial],
                msp_exhaustive=True,
            )
        ]

    rows, thresholds, _ = _service(StubExecutor(answer)).msp_table([2], 4, 4, seed=1)

    assert [(row.k, row.msp_probability) for row in rows] == [(2, 0.25), (3, 0.75), (4, 0.75)]
    assert all(row.exhaustive for row in rows)
    assert thresholds == {2: {"0.90": None, "0.99": None}}


def test_ber_sweep_groups_by_snr_decoder_and_epsilon() -> None:
    def answer(task: TrialTask) -> list[TrialRecord]:
        base = {"command": "ber", "trial": task.trial, "n": task.n, "k": task.k}
        vh_success = task.trial == 0
        return [
            TrialRecord(
                **base,
                decoder="vh",
                snr_db=task.snr_db,
                epsilon=0.05,
                status="success" if vh_success else "outage",
                ber=0.1 if vh_success else None,
                condition_number=4.0,
            ),
            TrialRecord(
                **base,
                decoder="zf",
                snr_db=task.snr_db,
                status="success",
                ber=0.2,
                condition_number=4.0,
            ),
        ]

    rows, records = _service(StubExecutor(answer)).ber_sweep(
        2, 8, [10.0, 20.0], [0.05], ["vh", "zf"], 2, seed=3
    )

    assert len(records) == 8
    assert [(row.snr_db, row.decoder, row.epsilon) for row in rows] == [
        (10.0, "vh", 0.05),
        (10.0, "zf", None),
        (20.0, "vh", 0.05),
        (20.0, "zf", None),
    ]
    vh = rows[0]
    assert vh.completion_probability == 0.5
    assert vh.outage_rate == 0.5
    assert vh.ber == pytest.approx(0.1)
    assert vh.ber_erasure == pytest.approx((0.1 + 0.5) / 2)
    assert rows[1].ber == pytest.approx(0.2)
    assert rows[1].mean_condition_number == 4.0


def test_entry_distribution_counts_stalls() -> None:
    def answer(task: TrialTask) -> list[TrialRecord]:
        base = {"command": "dist", "trial": task.trial, "n": task.n, "k": task.k}
        if task.trial == 0:
            return [TrialRecord(**base, status="stalled")]
        return [
            TrialRecord(
                **base,
                status="found",
                plus_minus_fraction=0.6,
                zero_fraction=0.1,
                interior_fraction=0.3,
            )
        ]

    rows, _ = _service(StubExecutor(answer)).entry_distribution(3, [6, 9], 3, seed=0)

    assert [row.k for row in rows] == [6, 9]
    assert rows[0].stalled == 1
    assert rows[0].plus_minus_fraction == pytest.approx(0.6)


def test_trial_streams_depend_on_coordinates_not_order() -> None:
    task = TrialTask(command="msp", master_seed=5, n=3, k=9, cell=1, trial=4)
    first = trial_rng(task, CHANNEL_STREAM).random(4)
    second = trial_rng(task, CHANNEL_STREAM).random(4)
    other = trial_rng(task.model_copy(update={"trial": 5}), CHANNEL_STREAM).random(4)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, other)
    assert task.seed_label == "5:3:9:1:4"


def test_registry_covers_every_bench_command() -> None:
    assert set(build_default_runner_registry()) == {"table1", "msp", "ber", "dist"}


@pytest.mark.parametrize(
    "decoder,rho",
    [("ml", 0.0), ("ml:0.01", 0.01), ("ml:0.2", 0.2)],
)
def test_parse_ml_rho(decoder: str, rho: float) -> None:
    assert parse_ml_rho(decoder) == rho


@pytest.mark.parametrize("decoder", ["ml:x", "ml:-1"])
def test_parse_ml_rho_rejects_bad_values(decoder: str) -> None:
    with pytest.raises(InputError):
        parse_ml_rho(decoder)


def test_msp_runner_finds_smallest_prefix() -> None:
    tasks = [
        TrialTask(command="msp", master_seed=2, n=2, k=12, kmax=12, trial=trial)
        for trial in range(5)
    ]
    for record in run_trials(tasks):
        assert record.msp_exhaustive is True
        assert record.msp_k is None or 2 <= record.msp_k <= 12


def test_dist_runner_reports_fractions() -> None:
    task = TrialTask(command="dist", master_seed=0, n=3, k=9, trial=0)
    (record,) = run_trials([task])
    if record.status == "found":
        total = record.plus_minus_fraction + record.zero_fraction + record.interior_fraction
        assert total == pytest.approx(1.0)
    else:
        assert record.plus_minus_fraction is None


def test_ber_runner_emits_one_record_per_decoder_and_epsilon() -> None:
    task = TrialTask(
        command="ber",
        master_seed=4,
        n=2,
        k=10,
        trial=0,
        snr_db=30.0,
        epsilons=[0.02, 0.05],
        decoders=["vh", "zf", "ml:0.01"],
        decode=DecodeConfig(seed=0, max_restarts=2),
    )
    records = run_trials([task])
    assert [(record.decoder, record.epsilon) for record in records] == [
        ("vh", 0.02),
        ("vh", 0.05),
        ("zf", None),
        ("ml:0.01", None),
    ]
    assert records[2].status == "success"
    assert records[2].ber is not None


def test_worker_pool_matches_inline_run() -> None:
    tasks = [
        TrialTask(command="msp", master_seed=7, n=3, k=10, kmax=10, trial=trial)
        for trial in range(6)
    ]
    inline = run_trials(tasks, threads=1)
    pooled = run_trials(tasks, threads=2)
    assert [record.model_dump() for record in pooled] == [
        record.model_dump() for record in inline
    ]


def _repeated_row_instance(n: int, k: int, *_: Any, **__: Any) -> ChannelInstance:
    row = np.where(np.arange(k) % 3 == 0, -1.0, 1.0)
    symbols = np.tile(row, (n, 1))
    channel = np.eye(n) + 0.1
    return ChannelInstance(n=n, k=k, A=channel, X=symbols, sigma=0.0, Y=channel @ symbols)


def _full_rank_instance(n: int, k: int, *_: Any, **__: Any) -> ChannelInstance:
    block = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, -1.0]])
    symbols = np.tile(block, (1, k // 3))
    channel = np.eye(n) + 0.1
    return ChannelInstance(n=n, k=k, A=channel, X=symbols, sigma=0.0, Y=channel @ symbols)


def test_rank_deficient_trials_become_outages(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(internal_runners, "sample_instance", _repeated_row_instance)
    task = TrialTask(command="table1", master_seed=0, n=2, k=8, trial=0)

    (record,) = SuccessTrialRunner().run(task)

    assert record.status == "outage"
    assert record.ber is None
    assert record.alg1_calls is None


def test_dist_runner_skips_rank_deficient_observations(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(internal_runners, "sample_instance", _repeated_row_instance)
    task = TrialTask(command="dist", master_seed=0, n=3, k=9, trial=0)

    (record,) = EntryDistributionTrialRunner().run(task)

    assert record.status == "rank_deficient"


def test_blind_records_carry_trap_counters(monkeypatch: pytest.MonkeyPatch) -> None:
    class TrappedDecoder:
        def __init__(self, *_: object, **__: object) -> None:
            pass

        def decode(self, *_: object) -> DecodeResult:
            stats = DecodeStats(traps=2, visit_limits=1, suspected_false_traps=1, alg3_calls=3)
            return DecodeResult(status="outage", stats=stats)

    monkeypatch.setattr(internal_runners, "sample_instance", _full_rank_instance)
    monkeypatch.setattr(internal_runners, "BlindDecoderService", TrappedDecoder)
    task = TrialTask(command="table1", master_seed=1, n=3, k=12, trial=0)

    (record,) = SuccessTrialRunner().run(task)

    assert record.status == "outage"
    assert (record.traps, record.visit_limits, record.suspected_false_traps) == (2, 1, 1)
    assert record.alg3_calls == 3


def test_success_table_survives_rank_deficient_draws() -> None:
    rows, records = BenchService(DecodeConfig(seed=0)).success_table([(2, 8)], 500, seed=0)

    assert len(records) == 500
    assert rows[0].trials == 500
    assert rows[0].success_probability >= 0.95
    for record in records:
        assert record.status in {"success", "outage"}


def test_ber_sweep_orders_decoders_and_improves_with_snr() -> None:
    service = BenchService(DecodeConfig(seed=0, max_restarts=3))
    rows, _ = service.ber_sweep(
        2, 16, [5.0, 25.0], [0.05], ["vh", "zf", "ml"], trials=150, seed=4
    )
    by_key = {(row.snr_db, row.decoder): row for row in rows}

    for snr_db in (5.0, 25.0):
        ml, zf = by_key[(snr_db, "ml")], by_key[(snr_db, "zf")]
        assert ml.ber is not None and zf.ber is not None
        assert ml.ber <= zf.ber
    assert by_key[(25.0, "zf")].ber < by_key[(5.0, "zf")].ber
    assert by_key[(25.0, "vh")].ber_erasure < by_key[(5.0, "vh")].ber_erasure


@pytest.mark.slow
def test_vertex_finding_output_is_mostly_signs() -> None:
    rows, _ = BenchService(DecodeConfig(seed=0)).entry_distribution(4, [8, 20], 1000, seed=6)
    short, long = rows
    assert long.plus_minus_fraction is not None and long.plus_minus_fraction >= 0.95
    assert short.zero_fraction is not None and long.zero_fraction is not None
    assert long.zero_fraction <= short.zero_fraction
