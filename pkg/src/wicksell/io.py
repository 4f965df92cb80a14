"""Reading observations and writing deterministic CSV / JSON output."""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .errors import InputError
from .sampling import SampleSet

HEADERS = {"radius", "z"}


def fmt(value) -> str:
    """17 significant digits, enough for an exact round trip."""
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def read_observations(path: str | Path, squared: bool = False) -> SampleSet:
    """Observations from a one-column CSV with optional header ``radius`` or ``z``.

    Values are circle radii and are squared unless ``squared`` is set.
    """
    text = Path(path).read_text()
    values: list[float] = []
    for lineno, row in enumerate(csv.reader(_io.StringIO(text)), start=1):
        cells = [c.strip() for c in row]
        if not cells or all(c == "" for c in cells):
            continue
        if len(cells) != 1:
            raise InputError(f"row {lineno}: expected one column, got {len(cells)}")
        cell = cells[0]
        if lineno == 1 and cell.lower() in HEADERS:
            continue
        try:
            v = float(cell)
        except ValueError:
            raise InputError(f"row {lineno}: not a number: {cell!r}") from None
        if not math.isfinite(v) or v < 0:
            raise InputError(f"row {lineno}: value must be finite and nonnegative, got {cell!r}")
        values.append(v)
    if not values:
        raise InputError("no observations")
    if all(v == 0 for v in values):
        raise InputError("all observations are zero")
    return SampleSet.from_radii(values, squared=squared, provenance=f"ingested:{path}")


def write_columns(columns: Mapping[str, Sequence[float]], out: TextIO) -> None:
    names = list(columns)
    cols = [np.asarray(columns[k], dtype=float) for k in names]
    out.write(",".join(names) + "\n")
    for row in zip(*cols):
        out.write(",".join(fmt(v) for v in row) + "\n")


def write_matrix(header: Sequence[str], rows: Iterable[Sequence[float]], out: TextIO) -> None:
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return fmt(v) if math.isfinite(v) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (Mapping, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps_json(obj, indent: int = 2) -> str:
    """JSON with 17-digit floats and NaN/inf as ``null``."""
    return _encode(obj, indent, 0) + "\n"
