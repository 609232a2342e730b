"""Canonical report serialization."""
import csv
import io
import json
import math
import os
import tempfile
import typing as t
from pathlib import Path

import numpy as np

from hopfstraight.log import get_logger


log = get_logger(__name__)


def to_builtin(obj: t.Any) -> t.Any:
    """Convert numpy scalars and arrays, tuples and NamedTuples into JSON-ready builtins."""
    if hasattr(obj, "to_dict"):
        return to_builtin(obj.to_dict())
    if isinstance(obj, dict):
        return {str(key): to_builtin(value) for key, value in obj.items()}
    if isinstance(obj, np.ndarray):
        return [to_builtin(x) for x in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [to_builtin(x) for x in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.complexfloating, complex)):
        return {"re": to_builtin(obj.real), "im": to_builtin(obj.imag)}
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        # non-finite values are not valid JSON
        return value if math.isfinite(value) else None
    return obj


def canonical_json(obj: t.Any) -> str:
    """Serialize with sorted keys and shortest round-trip floats."""
    return json.dumps(to_builtin(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def rows_to_csv(header: t.Sequence[str], rows: t.Iterable[t.Sequence[t.Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(_csv_cell(cell) for cell in row)
    return buffer.getvalue()


def _csv_cell(cell: t.Any) -> str:
    if isinstance(cell, (float, np.floating)):
        return repr(float(cell))
    if cell is None:
        return ""
    return str(cell)


def write_atomic(path: t.Union[str, Path], text: str) -> None:
    """Write `text` to `path` through a temporary file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(temp_name, path)
    except BaseException:
        Path(temp_name).unlink(missing_ok=True)
        raise
    log.debug(f"Wrote {len(text)} characters to {path}")
