"""Strict reader for the simulator's CSV outputs."""

from __future__ import annotations

import csv

import numpy as np


class CsvError(Exception):
    """Input CSV cannot be used; ``column`` is set when one is missing."""

    def __init__(self, message: str, column: str | None = None):
        super().__init__(message)
        self.column = column


def read_table(path: str) -> dict[str, np.ndarray]:
    """Parse a header + float-rows CSV into named columns.

    Rejects files without data rows, ragged rows, and non-numeric cells;
    never resamples or reorders anything.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise CsvError(f"{path}: empty file")
            rows = list(reader)
    except OSError as exc:
        raise CsvError(f"{path}: {exc}")
    header = [name.strip() for name in header]
    if len(set(header)) != len(header):
        raise CsvError(f"{path}: duplicate column names in header")
    if not rows:
        raise CsvError(f"{path}: no data rows below the header")
    data = np.empty((len(rows), len(header)), dtype=float)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise CsvError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")
        try:
            data[i] = [float(cell) for cell in row]
        except ValueError as exc:
            raise CsvError(f"{path}: row {i + 2}: {exc}")
    return {name: data[:, j] for j, name in enumerate(header)}


def require_columns(table: dict[str, np.ndarray], names: list[str], path: str) -> None:
    for name in names:
        if name not in table:
            raise CsvError(f"{path}: missing column '{name}'", column=name)
