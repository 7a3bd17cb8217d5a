"""CSV and JSON output with a fixed column order and 12 significant digits."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

__all__ = ["OUTDIR_ENV", "format_value", "to_records", "render", "emit", "resolve_output"]

OUTDIR_ENV = "ITOFOURIER_OUTDIR"
DIGITS = 12


def format_value(x: Any) -> str:
    """Text form shared by both formats; floats get 12 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        return format(float(x), f".{DIGITS}g")
    return str(x)


def _json_value(x: Any):
    if x is None or isinstance(x, (bool, np.bool_)):
        return None if x is None else bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(format_value(x))
    return format_value(x)


def to_records(rows: Iterable) -> list[dict]:
    out = []
    for row in rows:
        if dataclasses.is_dataclass(row):
            row = {f.name: getattr(row, f.name) for f in dataclasses.fields(row)}
        out.append(dict(row))
    return out


def render(rows: Iterable, columns: Sequence[str], fmt: str = "csv") -> str:
    """Serialize ``rows`` (dicts or dataclasses) restricted to ``columns``, in that order."""
    records = to_records(rows)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow([format_value(rec.get(c)) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        data = [{c: _json_value(rec.get(c)) for c in columns} for rec in records]
        return json.dumps(data, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def resolve_output(path: str | os.PathLike) -> Path:
    """Relative paths land under ``$ITOFOURIER_OUTDIR`` when it is set."""
    path = Path(path)
    base = os.environ.get(OUTDIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def emit(rows: Iterable, columns: Sequence[str], fmt: str = "csv", out: str | os.PathLike | None = None, stream=None) -> str:
    """Render and write to ``out`` (a file) or ``stream``; returns the text."""
    text = render(rows, columns, fmt)
    if out is not None:
        resolve_output(out).write_text(text)
    elif stream is not None:
        stream.write(text)
    return text
