"""Deterministic CSV writing shared by the simulators and the CLI."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence


def fmt(v) -> str:
    """12 significant digits, locale independent; ints pass through unchanged."""
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    return format(float(v), ".12g")


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path
