"""Plain-text coefficient database.

One record per line, ``k,j1,...,jk,num,den`` with ``j1`` the innermost
index.  ``#`` lines form a header that pins the format version, basis,
reference interval, ordering convention and record count; a file whose
record count disagrees with its header is rejected as malformed.
"""

from __future__ import annotations

import os
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np

from .coefficients import CoefficientTensor, WeightSpec, coefficient_tensor

__all__ = ["DB_VERSION", "CoeffDBError", "export_db", "import_db", "format_records"]

DB_VERSION = 1

_HEADER_KEYS = ("version", "basis", "interval", "ordering", "weights", "records")


class CoeffDBError(ValueError):
    """Raised for malformed or incompatible database files."""


def format_records(tensors: Iterable[CoefficientTensor]) -> list[str]:
    lines = []
    for tensor in tensors:
        for js, value in tensor.entries():
            fields = [tensor.k, *js, value.numerator, value.denominator]
            lines.append(",".join(str(int(f)) for f in fields))
    return lines


def export_db(p: int, multiplicities: Iterable[int], path: str | os.PathLike) -> Path:
    """Write all unit-weight ``cbar`` with indices ``0..p`` for each listed ``k``."""
    ks = sorted(set(int(k) for k in multiplicities))
    if not ks:
        raise ValueError("no multiplicities requested")
    tensors = [coefficient_tensor(WeightSpec.unit(k), p) for k in ks]
    records = format_records(tensors)
    header = [
        f"# version={DB_VERSION}",
        "# basis=legendre",
        "# interval=[-1,1]",
        "# ordering=cbar[j_k..j_1];fields=k,j1..jk,num,den;j1=innermost",
        "# weights=unit",
        f"# records={len(records)}",
    ]
    path = Path(path)
    path.write_text("\n".join(header + records) + "\n", encoding="ascii")
    return path


def _parse_header(lines: list[str]) -> dict[str, str]:
    header = {}
    for line in lines:
        body = line[1:].strip()
        if "=" not in body:
            raise CoeffDBError(f"malformed header line: {line!r}")
        key, value = body.split("=", 1)
        header[key.strip()] = value.strip()
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise CoeffDBError(f"malformed header, missing {', '.join(missing)}")
    return header


def import_db(path: str | os.PathLike) -> dict[int, CoefficientTensor]:
    """Read a database written by :func:`export_db`, keyed by multiplicity."""
    try:
        text = Path(path).read_text(encoding="ascii")
    except UnicodeDecodeError as exc:
        raise CoeffDBError(f"malformed file: {exc}") from exc
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    head = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    header = _parse_header(head)
    try:
        version = int(header["version"])
    except ValueError as exc:
        raise CoeffDBError("malformed version field") from exc
    if version != DB_VERSION:
        raise CoeffDBError(f"version mismatch: file has {version}, reader expects {DB_VERSION}")
    if header["basis"] != "legendre" or header["interval"] != "[-1,1]":
        raise CoeffDBError("malformed header: unsupported basis or interval")
    try:
        expected = int(header["records"])
    except ValueError as exc:
        raise CoeffDBError("malformed record count") from exc
    if expected != len(body):
        raise CoeffDBError(f"malformed file: header declares {expected} records, found {len(body)}")

    by_k: dict[int, dict[tuple[int, ...], Fraction]] = {}
    for n, line in enumerate(body, 1):
        try:
            fields = [int(f) for f in line.split(",")]
        except ValueError as exc:
            raise CoeffDBError(f"malformed record {n}: {line!r}") from exc
        if not fields or len(fields) != fields[0] + 3 or fields[-1] <= 0:
            raise CoeffDBError(f"malformed record {n}: {line!r}")
        k = fields[0]
        js = tuple(fields[1:1 + k])
        by_k.setdefault(k, {})[js] = Fraction(fields[-2], fields[-1])

    out = {}
    for k, entries in sorted(by_k.items()):
        shape = tuple(max(js[a] for js in entries) + 1 for a in range(k))
        if len(entries) != int(np.prod(shape)):
            raise CoeffDBError(f"malformed file: grid for k={k} is incomplete")
        grid = np.empty(shape, dtype=object)
        for js, v in entries.items():
            grid[js] = v
        out[k] = CoefficientTensor(WeightSpec.unit(k), grid)
    return out
