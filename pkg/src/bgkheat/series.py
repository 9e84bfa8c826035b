"""Tabular diagnostics and the CSV interchange format.

Every file starts with one ``#``-prefixed line holding the resolved
configuration as JSON, followed by the header row. Floats are written with
17 significant digits so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def _fmt(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


class DiagnosticsSeries:
    def __init__(self, columns: Sequence[str]):
        self.columns = tuple(columns)
        self.rows: list[tuple] = []

    def append(self, row: Iterable) -> None:
        row = tuple(row)
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} entries, expected {len(self.columns)}")
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def last(self, name: str) -> float:
        return float(self.rows[-1][self.columns.index(name)])

    def to_csv(self, path: str | Path | None = None, config: dict | None = None) -> str:
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(config or {}, sort_keys=True, default=str) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def read_csv(path: str | Path) -> tuple[dict, DiagnosticsSeries]:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# config: "):
        raise ValueError(f"{path}: missing config comment line")
    config = json.loads(lines[0][len("# config: "):])
    reader = csv.reader(lines[1:])
    header = next(reader)
    series = DiagnosticsSeries(header)
    for row in reader:
        series.append(float(x) if _is_number(x) else x for x in row)
    return config, series


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True
