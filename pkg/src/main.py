from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from src.core.config import get_settings, validate_runtime_settings
from src.core.errors import BlindHopError, InputError, error_envelope_json
from src.core.logging import configure_logging
from src.repositories.csv_repository import CsvRepository
from src.schemas.bench import (
    TIMING_COLUMNS,
    TRIAL_SCHEMA_VERSION,
    BerSweepRow,
    DecodeSummary,
    EntryDistributionRow,
    MspTableRow,
    SuccessTableRow,
    TrialRecord,
)
from src.schemas.solver import DecodeConfig
from src.services.bench_service import BenchService
from src.services.blind_decoder_service import BlindDecoderService
from src.shared.base import BaseSchema

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_OUTAGE = 2

BOOLEAN_OPTIONS = {"omit_timing", "escalate_epsilon", "slow"}
TABLE1_CASES = "2:8,3:13,4:18,5:18,6:22,8:30"
SLOW_TABLE1_CASES = "10:100,12:144"

logger = logging.getLogger(__name__)


class UsageError(BlindHopError):
    def __init__(self, message: str) -> None:
        super().__init__(code="usage", message=message, exit_code=EXIT_USAGE)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def load_config_file(path: str) -> dict[str, str]:
    """Read `key=value` lines; keys may use flag spelling (`--max-restarts`) or dest spelling."""
    config_path = Path(path)
    if not config_path.exists():
        raise InputError(f"Config file not found: {path}")
    values: dict[str, str] = {}
    with config_path.open("r", encoding="utf-8") as config_file:
        for line in config_file:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, value = line.split("=", 1)
            values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _coerce_defaults(values: dict[str, str]) -> dict[str, Any]:
    coerced: dict[str, Any] = {}
    for key, value in values.items():
        if key in BOOLEAN_OPTIONS:
            coerced[key] = value.lower() in {"true", "t", "1", "yes", "y"}
        else:
            coerced[key] = value
    return coerced


def parse_int_list(raw: str) -> list[int]:
    try:
        return [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"Expected comma-separated integers, got {raw!r}") from exc


def parse_cases(raw: str) -> list[tuple[int, int]]:
    cases: list[tuple[int, int]] = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            n_text, k_text = part.split(":")
            cases.append((int(n_text), int(k_text)))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"Expected n:k pairs, got {part!r}") from exc
    return cases


def parse_float_range(raw: str) -> list[float]:
    """Either `start:step:stop` (inclusive) or a comma-separated list."""
    try:
        if ":" in raw:
            start, step, stop = (float(part) for part in raw.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + index * step, 10) for index in range(max(count, 0))]
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"Bad range {raw!r}: {exc}") from exc


def parse_decoders(raw: str) -> list[str]:
    decoders = [part.strip() for part in raw.split(",") if part.strip()]
    for decoder in decoders:
        if decoder not in {"vh", "zf"} and not decoder.startswith("ml"):
            raise argparse.ArgumentTypeError(f"Unknown decoder {decoder!r}")
    return decoders


def build_parser() -> _ArgumentParser:
    settings = get_settings()
    parser = _ArgumentParser(
        prog="blindhop", description="Blind BPSK MIMO decoding by vertex hopping"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_common(command: argparse.ArgumentParser) -> None:
        command.add_argument("--config", default=None, help="key=value file of flag defaults")
        command.add_argument("--seed", type=int, default=0)
        command.add_argument("--log-level", default=settings.log_level)
        command.add_argument("--epsilon", type=float, default=settings.epsilon)
        command.add_argument("--max-restarts", type=int, default=settings.max_restarts)
        command.add_argument("--max-find-attempts", type=int, default=settings.max_find_attempts)
        command.add_argument(
            "--escalate-epsilon", action="store_true", default=settings.escalate_epsilon
        )
        command.add_argument("--out", default=None, help="Output path (stdout when omitted)")

    def add_bench(command: argparse.ArgumentParser) -> None:
        add_common(command)
        command.add_argument("--trials", type=int, default=100)
        command.add_argument("--threads", type=int, default=settings.threads)
        command.add_argument("--records", default=None, help="Write per-trial records CSV here")
        command.add_argument("--omit-timing", action="store_true", default=False)

    decode = subparsers.add_parser("decode", help="Blind-decode an n x k observation CSV")
    add_common(decode)
    decode.add_argument("--input", required=True)
    decode.add_argument("--n", type=int, default=None, help="Expected antenna count")

    table1 = subparsers.add_parser("table1", help="Noiseless success rate and call counts")
    add_bench(table1)
    table1.add_argument("--cases", type=parse_cases, default=parse_cases(TABLE1_CASES))
    table1.add_argument(
        "--slow",
        action="store_true",
        default=False,
        help=f"Also run the large cases {SLOW_TABLE1_CASES}",
    )

    msp = subparsers.add_parser("msp", help="Maximal-subset-property probability by k")
    add_bench(msp)
    msp.add_argument("--n", type=parse_int_list, default=[2, 4, 6])
    msp.add_argument("--kmax", type=int, default=40)

    ber = subparsers.add_parser("ber", help="BER, completion and outage across SNR")
    add_bench(ber)
    ber.add_argument("--n", type=int, default=4)
    ber.add_argument("--k", type=int, default=30)
    ber.add_argument("--snr", type=parse_float_range, default=parse_float_range("10:4:30"))
    ber.add_argument("--epsilons", type=parse_float_range, default=None)
    ber.add_argument("--decoders", type=parse_decoders, default=["vh", "zf", "ml:0.01"])
    ber.add_argument("--distribution", choices=["gaussian", "rayleigh"], default="gaussian")

    dist = subparsers.add_parser("dist", help="Distribution of vertex-finding output entries")
    add_bench(dist)
    dist.add_argument("--n", type=int, default=4)
    dist.add_argument("--k", type=parse_int_list, default=[8, 12, 16, 20])

    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        defaults = _coerce_defaults(load_config_file(args.config))
        subparser = _subparser(parser, args.command)
        known = {action.dest for action in subparser._actions}
        unknown = sorted(set(defaults) - known)
        if unknown:
            raise UsageError(f"Unknown config keys: {', '.join(unknown)}")
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise UsageError(f"Unknown command {command}")


def _decode_config(args: argparse.Namespace) -> DecodeConfig:
    settings = get_settings()
    try:
        return DecodeConfig.from_settings(
            settings,
            epsilon=args.epsilon,
            max_restarts=args.max_restarts,
            max_find_attempts=args.max_find_attempts,
            escalate_epsilon=args.escalate_epsilon,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _bench_service(args: argparse.Namespace) -> BenchService:
    settings = get_settings()
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    if args.seed < 0:
        raise UsageError("--seed must be non-negative")
    return BenchService(
        _decode_config(args),
        threads=args.threads,
        log_level=args.log_level,
        msp_exhaustive_limit=settings.msp_exhaustive_limit,
        msp_random_budget=settings.msp_random_budget,
    )


def _write_table(
    args: argparse.Namespace,
    schema: str,
    rows: Sequence[BaseSchema],
    row_type: type[BaseSchema],
    records: Sequence[TrialRecord],
) -> None:
    repository = CsvRepository()
    blank = TIMING_COLUMNS if args.omit_timing else frozenset()
    columns = list(row_type.model_fields.keys())
    repository.write_rows(
        args.out or sys.stdout, schema, rows, columns=columns, blank_columns=blank
    )
    if args.records:
        repository.write_rows(
            args.records,
            TRIAL_SCHEMA_VERSION,
            records,
            columns=list(TrialRecord.model_fields.keys()),
            blank_columns=blank,
        )


def _summary(payload: dict[str, Any], args: argparse.Namespace) -> None:
    if args.out:
        print(json.dumps(payload))


def run_decode(args: argparse.Namespace) -> int:
    repository = CsvRepository()
    observations = repository.read_matrix(args.input)
    if args.n is not None and observations.shape[0] != args.n:
        raise InputError(f"--n {args.n} does not match the {observations.shape[0]} input rows")

    service = BlindDecoderService(_decode_config(args))
    result = service.decode(observations, np.random.default_rng(args.seed))
    stats = result.stats
    payload = DecodeSummary(
        status=result.status,
        n=observations.shape[0],
        k=observations.shape[1],
        epsilon=stats.epsilon_used if stats.epsilon_used is not None else args.epsilon,
        seed=args.seed,
        restarts=stats.restarts,
        alg1_calls=stats.alg1_calls,
        alg3_calls=stats.alg3_calls,
        hops=stats.hops,
        vertices_visited=stats.vertices_visited,
        wall_time_seconds=stats.wall_time_seconds,
        output=args.out,
    ).model_dump(by_alias=True)
    if not result.succeeded or result.Xhat is None:
        print(json.dumps(payload))
        return EXIT_OUTAGE
    if args.out:
        repository.write_sign_matrix(args.out, result.Xhat)
        print(json.dumps(payload))
    else:
        for row in result.Xhat.astype(int):
            print(",".join(str(value) for value in row))
        print(json.dumps(payload), file=sys.stderr)
    return EXIT_OK


def table1_cases(args: argparse.Namespace) -> list[tuple[int, int]]:
    cases = list(args.cases)
    if args.slow:
        cases.extend(case for case in parse_cases(SLOW_TABLE1_CASES) if case not in cases)
    return cases


def run_table1(args: argparse.Namespace) -> int:
    rows, records = _bench_service(args).success_table(table1_cases(args), args.trials, args.seed)
    _write_table(args, "success-table/1", rows, SuccessTableRow, records)
    _summary({"command": "table1", "cells": len(rows), "output": args.out}, args)
    return EXIT_OK


def run_msp(args: argparse.Namespace) -> int:
    rows, thresholds, records = _bench_service(args).msp_table(
        args.n, args.kmax, args.trials, args.seed
    )
    _write_table(args, "msp-table/1", rows, MspTableRow, records)
    payload = {"command": "msp", "thresholds": {str(n): value for n, value in thresholds.items()}}
    if args.out:
        print(json.dumps(payload))
    else:
        print(json.dumps(payload), file=sys.stderr)
    return EXIT_OK


def run_ber(args: argparse.Namespace) -> int:
    epsilons = args.epsilons or [args.epsilon]
    rows, records = _bench_service(args).ber_sweep(
        args.n,
        args.k,
        args.snr,
        epsilons,
        args.decoders,
        args.trials,
        args.seed,
        distribution=args.distribution,
    )
    _write_table(args, "ber-sweep/1", rows, BerSweepRow, records)
    _summary({"command": "ber", "rows": len(rows), "output": args.out}, args)
    return EXIT_OK


def run_dist(args: argparse.Namespace) -> int:
    rows, records = _bench_service(args).entry_distribution(args.n, args.k, args.trials, args.seed)
    _write_table(args, "entry-distribution/1", rows, EntryDistributionRow, records)
    _summary({"command": "dist", "rows": len(rows), "output": args.out}, args)
    return EXIT_OK


COMMANDS = {
    "decode": run_decode,
    "table1": run_table1,
    "msp": run_msp,
    "ber": run_ber,
    "dist": run_dist,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        validate_runtime_settings()
        args = parse_args(argv)
        configure_logging(args.log_level, stream=sys.stderr)
        return COMMANDS[args.command](args)
    except BlindHopError as exc:
        print(error_envelope_json(exc), file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(error_envelope_json(UsageError(str(exc))), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
