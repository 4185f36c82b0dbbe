"""Plain-text Netpbm and CSV writers used by the report paths."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# RGB per label index; labels beyond 7 wrap around.
PALETTE: tuple[tuple[int, int, int], ...] = (
    (230, 25, 75),    # 0 red
    (60, 180, 75),    # 1 green
    (0, 130, 200),    # 2 blue
    (255, 225, 25),   # 3 yellow
    (145, 30, 180),   # 4 purple
    (70, 240, 240),   # 5 cyan
    (245, 130, 48),   # 6 orange
    (128, 128, 128),  # 7 grey
)


def _rows(values: np.ndarray) -> str:
    return "".join(" ".join(str(int(v)) for v in row) + "\n" for row in values)


def pgm_text(values: np.ndarray, maxval: int) -> str:
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("PGM needs a 2-D array")
    if maxval < 1 or values.min(initial=0) < 0 or values.max(initial=0) > maxval:
        raise ValueError("PGM values must lie in [0, maxval] with maxval >= 1")
    h, w = values.shape
    return f"P2\n{w} {h}\n{maxval}\n" + _rows(values)


def ppm_text(labels: np.ndarray, palette: Sequence[tuple[int, int, int]] = PALETTE) -> str:
    labels = np.asarray(labels)
    h, w = labels.shape
    table = np.asarray(palette, dtype=np.int64)
    rgb = table[labels % len(table)].reshape(h, w * 3)
    return f"P3\n{w} {h}\n255\n" + _rows(rgb)


def read_netpbm(path) -> tuple[str, np.ndarray, int]:
    """Parse a plain P2/P3 file; returns (magic, array, maxval)."""
    tokens = []
    for line in Path(path).read_text().splitlines():
        tokens.extend(line.split("#", 1)[0].split())
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    shape = (h, w) if magic == "P2" else (h, w, 3)
    return magic, data.reshape(shape), maxval


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_text(path, text: str) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"
