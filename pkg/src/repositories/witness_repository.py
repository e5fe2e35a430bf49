from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

import numpy as np

from src.core.errors import InputError, UnsupportedDimensionError

WITNESS_PACKAGE = "src.data.witnesses"
_HEADER_PATTERN = re.compile(r"n=(\d+)\s+\|det\|=(\d+)")


def _witness_filename(n: int) -> str:
    return f"n{n:02d}.txt"


def parse_witness(text: str) -> tuple[int, np.ndarray]:
    """Parse a witness grid; returns (declared |det|, matrix)."""
    declared: int | None = None
    rows: list[list[float]] = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            match = _HEADER_PATTERN.search(stripped)
            if match:
                declared = int(match.group(2))
            continue
        try:
            rows.append([float(token) for token in stripped.split()])
        except ValueError as exc:
            raise InputError(f"Witness row is not numeric: {stripped!r}") from exc

    if declared is None:
        raise InputError("Witness file is missing its '# ... n=N |det|=D' header")
    if not rows or any(len(row) != len(rows) for row in rows):
        raise InputError("Witness grid must be square")
    matrix = np.array(rows, dtype=float)
    if not np.all(np.abs(matrix) == 1.0):
        raise InputError("Witness entries must be +1 or -1")
    return declared, matrix


class WitnessRepository:
    def available_dimensions(self) -> list[int]:
        names = [entry.name for entry in resources.files(WITNESS_PACKAGE).iterdir()]
        return sorted(int(name[1:3]) for name in names if re.fullmatch(r"n\d\d\.txt", name))

    def load(self, n: int) -> np.ndarray:
        return _load_witness(n)[1].copy()

    def declared_det(self, n: int) -> int:
        return _load_witness(n)[0]


@lru_cache(maxsize=None)
def _load_witness(n: int) -> tuple[int, np.ndarray]:
    resource = resources.files(WITNESS_PACKAGE).joinpath(_witness_filename(n))
    if not resource.is_file():
        raise UnsupportedDimensionError(n, what="witness matrix")
    declared, matrix = parse_witness(resource.read_text(encoding="utf-8"))
    if matrix.shape != (n, n):
        raise InputError(f"Witness for n={n} has shape {matrix.shape}")
    return declared, matrix
