"""Text output helpers: 17-significant-digit numbers, JSON and CSV."""

from __future__ import annotations

import math
from typing import Any, Iterable, Sequence

import numpy as np

FORMAT_VERSION = 1


def fmt(x: Any) -> str:
    """Format a number with 17 significant digits; infinities become ``inf``."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def _json_str(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch in '"\\':
            out.append("\\" + ch)
        elif ch == "\n":
            out.append("\\n")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def to_json(obj: Any) -> str:
    """Serialize ``obj`` to compact JSON with every float at 17 significant digits.

    Non-finite floats are written as the strings ``"inf"``, ``"-inf"`` and
    ``"nan"`` since JSON has no literal for them.
    """
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return fmt(x)
        return _json_str(fmt(x))
    if isinstance(obj, str):
        return _json_str(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{_json_str(str(k))}:{to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def csv_text(header: dict | None, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """CSV with an optional ``# {json}`` first line carrying run metadata."""
    lines = []
    if header is not None:
        meta = {"format_version": FORMAT_VERSION}
        meta.update(header)
        lines.append("# " + to_json(meta))
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def read_csv_with_header(text: str) -> tuple[dict, list[str], list[list[str]]]:
    """Inverse of :func:`csv_text` for tests and round trips."""
    import json

    lines = text.splitlines()
    meta = {}
    if lines and lines[0].startswith("# "):
        meta = json.loads(lines[0][2:])
        lines = lines[1:]
    cols = lines[0].split(",")
    return meta, cols, [ln.split(",") for ln in lines[1:]]
