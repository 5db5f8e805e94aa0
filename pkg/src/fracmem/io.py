"""Byte-stable CSV and key-value text output."""

from __future__ import annotations

import contextlib
import csv
import math
import sys
from pathlib import Path


def fmt(value) -> str:
    """Render numbers with 12 significant digits; pass other values through."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    if isinstance(value, float) or hasattr(value, "dtype"):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if v == 0.0:
            return "0"
        return f"{v:.12g}"
    return str(value)


@contextlib.contextmanager
def open_out(path):
    """Yield a text stream for ``path``, or stdout for ``None`` / ``"-"``."""
    if path is None or str(path) == "-":
        yield sys.stdout
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        yield fh


def write_csv(path, header, rows):
    with open_out(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_report(path, sections):
    """Write ``[section]`` blocks of ``key = value`` lines."""
    with open_out(path) as fh:
        first = True
        for name, items in sections:
            if not first:
                fh.write("\n")
            first = False
            fh.write(f"[{name}]\n")
            for key, value in items:
                fh.write(f"{key} = {fmt(value)}\n")


def sibling(path, tag: str, suffix: str = None) -> Path:
    """``out.csv`` -> ``out_<tag>.csv`` next to it."""
    path = Path(path)
    return path.with_name(f"{path.stem}_{tag}{suffix or path.suffix}")
