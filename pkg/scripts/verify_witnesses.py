from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from typing import Any, Dict, List

from src.analytics.spectrum import (
    MAX_DET,
    STOPPING_SIGNATURES,
    integer_det,
    matches_stopping_rule,
    neighbor_det_signature,
)
from src.repositories.witness_repository import WitnessRepository


def parse_int_list(value: str) -> List[int]:
    return [int(item) for item in value.split(",") if item.strip()]


def check_witness(repository: WitnessRepository, n: int) -> Dict[str, Any]:
    matrix = repository.load(n)
    determinant = abs(integer_det(matrix))
    report: Dict[str, Any] = {
        "n": n,
        "det": determinant,
        "declared": repository.declared_det(n),
        "expected": MAX_DET[n],
        "ok": determinant == MAX_DET[n] == repository.declared_det(n),
    }
    if n in STOPPING_SIGNATURES:
        neighbors = neighbor_det_signature(matrix)
        ratios = [value / determinant for value in neighbors]
        report["neighborDets"] = {str(k): v for k, v in sorted(Counter(neighbors).items())}
        report["signatureOk"] = matches_stopping_rule(ratios, n)
        report["ok"] = report["ok"] and report["signatureOk"]
    return report


def main() -> None:
    parser = argparse.ArgumentParser(
        description="Check the maximal-determinant witness fixtures and their neighbor signatures."
    )
    parser.add_argument(
        "--n",
        type=parse_int_list,
        default=sorted(MAX_DET),
        help="Comma-separated dimensions to check (default: all)",
    )
    args = parser.parse_args()

    repository = WitnessRepository()
    reports = [check_witness(repository, n) for n in args.n]
    failures = [report["n"] for report in reports if not report["ok"]]
    print(json.dumps({"checked": len(reports), "failed": failures, "reports": reports}))
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
