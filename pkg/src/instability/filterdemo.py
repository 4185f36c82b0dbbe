"""Prototype filter banks and the label maps they induce on the unit square.

A filter bank labels a point by its winning prototype: the nearest one in L1
distance, or the one with the largest dot product. Four prototypes lying on
the anti-diagonal already produce regions where labels interleave at every
scale the raster can resolve; the helpers here rasterize those maps, mark
cells next to a label change, and estimate the box-counting dimension of the
label boundary.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import softmax

from .core import DecisionFunction, RejectedInputError, as_points, check_point, parallel_map

MAX_DEPTH = 14
_ROWS_PER_TASK = 64
_POINTS_PER_STRIP = 1 << 21


class ScoringMode(enum.Enum):
    L1_DISTANCE = "l1"
    DOT_PRODUCT = "dot"


@dataclass(frozen=True, eq=False)
class FilterBank(DecisionFunction):
    prototypes: np.ndarray
    mode: ScoringMode = ScoringMode.L1_DISTANCE
    dim: int = field(init=False)
    labels: int = field(init=False)

    def __post_init__(self):
        protos = np.array(self.prototypes, dtype=np.float64)
        if protos.ndim != 2 or protos.shape[0] < 2:
            raise RejectedInputError("a filter bank needs at least two prototype vectors")
        if not np.all((protos >= 0.0) & (protos <= 1.0)):
            raise RejectedInputError("prototypes must lie in the unit cube")
        protos.setflags(write=False)
        object.__setattr__(self, "prototypes", protos)
        object.__setattr__(self, "mode", ScoringMode(self.mode))
        object.__setattr__(self, "dim", protos.shape[1])
        object.__setattr__(self, "labels", protos.shape[0])

    def scores(self, X) -> np.ndarray:
        """Raw scores, shape ``(N, labels)``: L1 distances or dot products."""
        X = as_points(X, self.dim)
        P = self.prototypes[None, :, :]
        if self.mode is ScoringMode.L1_DISTANCE:
            return np.abs(X[:, None, :] - P).sum(axis=2)
        # Elementwise product and sum rather than matmul: BLAS blocking may
        # change the rounding between builds.
        return (X[:, None, :] * P).sum(axis=2)

    def logits(self, X) -> np.ndarray:
        s = self.scores(X)
        return -s if self.mode is ScoringMode.L1_DISTANCE else s

    def predict(self, X):
        # argmax/argmin return the first extremum: lowest label wins ties.
        s = self.scores(X)
        if self.mode is ScoringMode.L1_DISTANCE:
            return np.argmin(s, axis=1)
        return np.argmax(s, axis=1)


def paper_filter_bank(mode: ScoringMode | str = ScoringMode.L1_DISTANCE) -> FilterBank:
    """The four anti-diagonal prototypes of the original demonstration."""
    protos = [(1 / 2, 1 / 2), (2 / 3, 1 / 3), (1 / 3, 2 / 3), (1 / 4, 3 / 4)]
    return FilterBank(np.array(protos), ScoringMode(mode))


def winner(bank: FilterBank, x) -> tuple[int, float]:
    """Winning label for one point and its raw score."""
    arr = check_point(x, bank.dim)
    s = bank.scores(arr[None, :])[0]
    label = int(bank.predict(arr[None, :])[0])
    return label, float(s[label])


@dataclass(frozen=True)
class Extent:
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]`` inside the unit square."""

    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0

    def __post_init__(self):
        vals = (self.x0, self.x1, self.y0, self.y1)
        if any(not (0.0 <= v <= 1.0) for v in vals):
            raise RejectedInputError(f"extent {vals} leaves the unit square")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise RejectedInputError(f"extent {vals} has zero area")

    @classmethod
    def parse(cls, text: str) -> "Extent":
        parts = [float(p) for p in text.replace(" ", "").split(",")]
        if len(parts) != 4:
            raise RejectedInputError("extent needs four numbers: x0,x1,y0,y1")
        return cls(*parts)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x0, self.x1, self.y0, self.y1)


UNIT_SQUARE = Extent()


@dataclass(frozen=True, eq=False)
class LabelRaster:
    """Row-major label grid; row 0 is the top (largest y) of the extent."""

    labels: np.ndarray
    extent: Extent
    cardinality: int

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def counts(self) -> list[int]:
        return np.bincount(self.labels.ravel(), minlength=self.cardinality).tolist()


@dataclass(frozen=True, eq=False)
class InstabilityMap:
    raster: LabelRaster
    unstable: np.ndarray
    unstable_fraction: float


def _cell_centers(extent: Extent, width: int, height: int):
    cols = np.arange(width, dtype=np.float64)
    rows = np.arange(height, dtype=np.float64)
    xs = extent.x0 + (cols + 0.5) * ((extent.x1 - extent.x0) / width)
    ys = extent.y1 - (rows + 0.5) * ((extent.y1 - extent.y0) / height)
    return xs, ys


def _grid_points(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def _check_raster_args(f, extent, width, height):
    if getattr(f, "dim", None) != 2:
        raise RejectedInputError("rasterizing needs a 2-D classifier")
    if width < 2 or height < 2:
        raise RejectedInputError("width and height must be at least 2")
    if not isinstance(extent, Extent):
        extent = Extent(*extent)
    return extent


def rasterize(
    f: DecisionFunction, extent: Extent = UNIT_SQUARE, width: int = 512, height: int = 512,
    threads: int = 1,
) -> LabelRaster:
    """Label of every cell center."""
    extent = _check_raster_args(f, extent, width, height)
    xs, ys = _cell_centers(extent, width, height)
    blocks = [ys[i : i + _ROWS_PER_TASK] for i in range(0, height, _ROWS_PER_TASK)]
    parts = parallel_map(
        lambda yb: f.predict(_grid_points(xs, yb)).reshape(len(yb), width), blocks, threads
    )
    return LabelRaster(np.vstack(parts).astype(np.int64), extent, f.labels)


def soft_rasterize(
    bank: FilterBank, extent: Extent = UNIT_SQUARE, width: int = 64, height: int = 64,
    temperature: float = 1.0, threads: int = 1,
) -> np.ndarray:
    """Softmax of ``temperature * logits`` per cell, shape ``(height, width, labels)``.

    Logits are negated L1 distances or dot products depending on the bank mode.
    """
    if not temperature > 0:
        raise RejectedInputError("temperature must be positive")
    extent = _check_raster_args(bank, extent, width, height)
    xs, ys = _cell_centers(extent, width, height)
    blocks = [ys[i : i + _ROWS_PER_TASK] for i in range(0, height, _ROWS_PER_TASK)]

    def block(yb):
        z = temperature * bank.logits(_grid_points(xs, yb))
        return softmax(z, axis=1).reshape(len(yb), width, bank.labels)

    return np.concatenate(parallel_map(block, blocks, threads), axis=0)


def unstable_cells(raster: LabelRaster, neighborhood: int = 8) -> InstabilityMap:
    """Mark cells with a differently labelled neighbour (edges do not wrap)."""
    if neighborhood not in (4, 8):
        raise RejectedInputError("neighborhood must be 4 or 8")
    lab = raster.labels
    unstable = np.zeros(lab.shape, dtype=bool)
    offsets = [(0, 1), (1, 0)]
    if neighborhood == 8:
        offsets += [(1, 1), (1, -1)]
    h, w = lab.shape
    for dr, dc in offsets:
        # Compare each cell with its (dr, dc) neighbour; mark both ends.
        r0, r1 = 0, h - dr
        c0, c1 = max(0, -dc), w - max(0, dc)
        a = lab[r0:r1, c0:c1]
        b = lab[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
        diff = a != b
        unstable[r0:r1, c0:c1] |= diff
        unstable[r0 + dr : r1 + dr, c0 + dc : c1 + dc] |= diff
    return InstabilityMap(raster, unstable, int(unstable.sum()) / unstable.size)


@dataclass(frozen=True)
class BoxCountRecord:
    depths: tuple[int, ...]
    boundary_cells: tuple[int, ...]
    dimension: float | None

    @property
    def cells_per_side(self) -> tuple[int, ...]:
        return tuple(1 << d for d in self.depths)

    @property
    def cell_sizes(self) -> tuple[float, ...]:
        return tuple(2.0 ** -d for d in self.depths)

    def rows(self):
        for d, n in zip(self.depths, self.boundary_cells):
            log_n = math.log(n) if n > 0 else float("nan")
            yield d, 1 << d, n, d * math.log(2.0), log_n


def _boundary_cells_at_depth(f: DecisionFunction, extent: Extent, depth: int, threads: int) -> int:
    side = 1 << depth
    xs = extent.x0 + np.arange(side + 1, dtype=np.float64) * ((extent.x1 - extent.x0) / side)
    ys = extent.y1 - np.arange(side + 1, dtype=np.float64) * ((extent.y1 - extent.y0) / side)
    rows_per_strip = max(1, _POINTS_PER_STRIP // (side + 1))
    starts = range(0, side, rows_per_strip)

    def strip(start):
        stop = min(side, start + rows_per_strip)
        lab = f.predict(_grid_points(xs, ys[start : stop + 1])).reshape(stop - start + 1, side + 1)
        tl, tr = lab[:-1, :-1], lab[:-1, 1:]
        bl, br = lab[1:, :-1], lab[1:, 1:]
        same = (tl == tr) & (tl == bl) & (tl == br)
        return int((~same).sum())

    return sum(parallel_map(strip, starts, threads))


def box_dimension(depths, counts) -> float | None:
    """Least-squares slope of log N against log(1/s) over the last three depths."""
    depths, counts = list(depths)[-3:], list(counts)[-3:]
    if len(depths) < 2 or any(n <= 0 for n in counts):
        return None
    x = np.array(depths, dtype=np.float64) * math.log(2.0)
    y = np.log(np.array(counts, dtype=np.float64))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def refine_and_count(
    f: DecisionFunction, extent: Extent = UNIT_SQUARE, depths=(6, 7, 8), threads: int = 1
) -> BoxCountRecord:
    """Count boundary cells (corners not all one label) on 2^d x 2^d grids."""
    if getattr(f, "dim", None) != 2:
        raise RejectedInputError("box counting needs a 2-D classifier")
    depths = tuple(int(d) for d in depths)
    if not depths or any(b <= a for a, b in zip(depths, depths[1:])):
        raise RejectedInputError("depths must be non-empty and strictly increasing")
    if depths[0] < 0 or depths[-1] > MAX_DEPTH:
        raise RejectedInputError(f"depths must lie in [0, {MAX_DEPTH}]")
    if not isinstance(extent, Extent):
        extent = Extent(*extent)
    counts = tuple(_boundary_cells_at_depth(f, extent, d, threads) for d in depths)
    return BoxCountRecord(depths, counts, box_dimension(depths, counts))


BOXCOUNT_HEADER = ("depth", "cells_per_side", "boundary_cells", "log_inv_s", "log_N")
