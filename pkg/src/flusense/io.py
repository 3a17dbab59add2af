"""Small readers and writers for the flat text formats used across the package."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, Sequence


def read_kv(path: str | Path) -> dict[str, str]:
    """Read a flat ``key = value`` file. ``#`` starts a comment; blank lines are skipped.

    ``key: value`` is accepted too. Keys keep their case; later duplicates win.
    """
    out: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, _, value = line.partition(sep)
                break
        else:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def read_lines(path: str | Path) -> list[str]:
    """Non-empty, non-comment lines of a UTF-8 file, stripped."""
    lines = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append(line)
    return lines


def read_tsv(path: str | Path) -> list[list[str]]:
    return [line.split("\t") for line in read_lines(path)]


def fmt_float(x: float | None, digits: int = 10) -> str:
    """Deterministic text for a float; ``None`` and NaN become the empty string."""
    if x is None or x != x:
        return ""
    return f"{x:.{digits}g}"


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_float(v) if isinstance(v, float) or v is None else v for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def write_json(path: str | Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    return path
