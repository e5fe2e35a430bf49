from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np
from pydantic import BaseModel

from src.core.errors import InputError

FLOAT_FORMAT = ".10g"


def format_cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), FLOAT_FORMAT)
    return str(value)


def parse_matrix_text(text: str) -> np.ndarray:
    rows: list[list[float]] = []
    for line_number, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [cell.strip() for cell in row]
        if not cells or all(not cell for cell in cells) or cells[0].startswith("#"):
            continue
        try:
            rows.append([float(cell) for cell in cells])
        except ValueError as exc:
            raise InputError(f"Line {line_number}: non-numeric cell in {row!r}") from exc
    if not rows:
        raise InputError("Matrix CSV is empty")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise InputError("Matrix CSV rows have unequal lengths")
    matrix = np.array(rows, dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise InputError("Matrix CSV contains NaN or Inf")
    return matrix


class CsvRepository:
    def read_matrix(self, path: str | Path) -> np.ndarray:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"Cannot read {path}: {exc.strerror}") from exc
        return parse_matrix_text(text)

    def write_sign_matrix(self, path: str | Path, matrix: np.ndarray) -> None:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        for row in np.asarray(matrix):
            writer.writerow([str(int(value)) for value in row])
        self._write_text(path, buffer.getvalue())

    def write_rows(
        self,
        target: str | Path | TextIO,
        schema: str,
        rows: Sequence[BaseModel],
        *,
        columns: Optional[Iterable[str]] = None,
        blank_columns: Iterable[str] = (),
    ) -> None:
        """Write pydantic rows as CSV behind a `# schema=...` comment line."""
        header = list(columns) if columns is not None else self._columns(rows)
        blanked = set(blank_columns)
        buffer = io.StringIO()
        buffer.write(f"# schema={schema}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            values = row.model_dump(by_alias=False)
            writer.writerow(
                ["" if column in blanked else format_cell(values.get(column)) for column in header]
            )
        if isinstance(target, (str, Path)):
            self._write_text(target, buffer.getvalue())
        else:
            target.write(buffer.getvalue())

    @staticmethod
    def _columns(rows: Sequence[BaseModel]) -> list[str]:
        if not rows:
            return []
        return list(type(rows[0]).model_fields.keys())

    @staticmethod
    def _write_text(path: str | Path, text: str) -> None:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise InputError(f"Cannot write {path}: {exc.strerror}") from exc
