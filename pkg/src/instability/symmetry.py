"""Label-preserving grid symmetries: toroidal translations combined with grid isometries.

A transform acts on an ``m x n`` grid flattened row-major. Its permutation is
stored as a *source* index table: ``out.flat[q] = in.flat[source[q]]``. The
point operation is applied first, then the translation, which follows the
``np.roll`` convention ``out[i, j] = in[i - dr, j - dc]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .core import DecisionFunction, RejectedInputError, parallel_map, seeded_stream

SQUARE_POINT_OPS = (
    "identity", "rot90", "rot180", "rot270", "flip_h", "flip_v", "transpose", "antitranspose",
)
RECT_POINT_OPS = ("identity", "rot180", "flip_h", "flip_v")

_POINT_OP_FUNCS = {
    "identity": lambda a: a,
    "rot90": lambda a: np.rot90(a, 1),
    "rot180": lambda a: np.rot90(a, 2),
    "rot270": lambda a: np.rot90(a, 3),
    "flip_h": lambda a: a[:, ::-1],
    "flip_v": lambda a: a[::-1, :],
    "transpose": lambda a: a.T,
    "antitranspose": lambda a: np.rot90(a, 2).T,
}


def point_ops_for(m: int, n: int) -> tuple[str, ...]:
    return SQUARE_POINT_OPS if m == n else RECT_POINT_OPS


@dataclass(frozen=True)
class GridTransform:
    m: int
    n: int
    dr: int = 0
    dc: int = 0
    point_op: str = "identity"

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise RejectedInputError("grid dimensions must be positive")
        if self.point_op not in point_ops_for(self.m, self.n):
            raise RejectedInputError(f"{self.point_op!r} does not map a {self.m}x{self.n} grid to itself")
        object.__setattr__(self, "dr", self.dr % self.m)
        object.__setattr__(self, "dc", self.dc % self.n)

    @property
    def size(self) -> int:
        return self.m * self.n

    def source(self) -> np.ndarray:
        return _source_table(self.m, self.n, self.dr, self.dc, self.point_op)

    def apply_flat(self, X: np.ndarray) -> np.ndarray:
        """Permute the last axis of ``X`` (flattened grids)."""
        return np.asarray(X)[..., self.source()]

    def inverse(self) -> "GridTransform":
        src = self.source()
        inv = np.empty_like(src)
        inv[src] = np.arange(src.size)
        return _lookup(self.m, self.n, inv)

    def compose(self, other: "GridTransform") -> "GridTransform":
        """``self`` after ``other``."""
        if (self.m, self.n) != (other.m, other.n):
            raise RejectedInputError("cannot compose transforms of different grids")
        return _lookup(self.m, self.n, other.source()[self.source()])

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.source(), np.arange(self.size)))


@lru_cache(maxsize=4096)
def _source_table(m, n, dr, dc, op) -> np.ndarray:
    idx = np.arange(m * n).reshape(m, n)
    out = np.roll(_POINT_OP_FUNCS[op](idx), shift=(dr, dc), axis=(0, 1))
    table = np.ascontiguousarray(out).ravel()
    table.setflags(write=False)
    return table


@lru_cache(maxsize=64)
def _lookup_table(m: int, n: int) -> dict[bytes, GridTransform]:
    table = {}
    for t in enumerate_group(m, n, include_point_ops=True):
        table.setdefault(t.source().tobytes(), t)
    return table


def _lookup(m: int, n: int, source: np.ndarray) -> GridTransform:
    key = np.ascontiguousarray(source, dtype=np.int64).tobytes()
    try:
        return _lookup_table(m, n)[key]
    except KeyError:
        raise RejectedInputError("permutation is not a grid symmetry") from None


def enumerate_group(
    m: int, n: int, include_point_ops: bool = True, collapse: bool = False
) -> list[GridTransform]:
    """All translations, optionally combined with the grid's point group.

    ``collapse=True`` keeps only the first parameterisation of each distinct
    cell permutation.
    """
    if m < 1 or n < 1:
        raise RejectedInputError("grid dimensions must be positive")
    ops = point_ops_for(m, n) if include_point_ops else ("identity",)
    transforms = [
        GridTransform(m, n, dr, dc, op) for op in ops for dr in range(m) for dc in range(n)
    ]
    if not collapse:
        return transforms
    seen: set[bytes] = set()
    distinct = []
    for t in transforms:
        key = t.source().tobytes()
        if key not in seen:
            seen.add(key)
            distinct.append(t)
    return distinct


def apply_transform(t: GridTransform, raster) -> np.ndarray:
    """Permute the cells of an ``m x n`` array (or a LabelRaster's labels)."""
    grid = getattr(raster, "labels", raster)
    grid = np.asarray(grid)
    if grid.shape[:2] != (t.m, t.n):
        raise RejectedInputError(f"raster shape {grid.shape[:2]} does not match {t.m}x{t.n}")
    out = grid.reshape(t.size, *grid.shape[2:])[t.source()].reshape(grid.shape)
    if hasattr(raster, "labels"):
        return type(raster)(out, raster.extent, raster.cardinality)
    return out


@dataclass(frozen=True)
class InvarianceRow:
    transform_id: int
    transform: GridTransform
    violations: int
    samples: int

    @property
    def rate(self) -> float:
        return self.violations / self.samples if self.samples else 0.0


INVARIANCE_HEADER = ("transform_id", "translation_r", "translation_c", "point_op", "violations", "samples")


def check_invariance(
    f: DecisionFunction, transforms: Sequence[GridTransform], samples: int = 1000,
    seed: int = 0, threads: int = 1,
) -> list[InvarianceRow]:
    """Count sampled points whose label changes under each transform."""
    if not transforms:
        return []
    size = transforms[0].size
    if f.dim != size:
        raise RejectedInputError(f"classifier dim {f.dim} != grid size {size}")
    X = seeded_stream(seed, 0).random((samples, size))
    base = f.predict(X)

    def count(t):
        return int(np.count_nonzero(f.predict(t.apply_flat(X)) != base))

    counts = parallel_map(count, transforms, threads)
    return [InvarianceRow(i, t, c, samples) for i, (t, c) in enumerate(zip(transforms, counts))]


def invariance_rows(report: Sequence[InvarianceRow]):
    for r in report:
        yield r.transform_id, r.transform.dr, r.transform.dc, r.transform.point_op, r.violations, r.samples


@dataclass(frozen=True, eq=False)
class Orbit:
    centers: np.ndarray
    epsilon: float

    @property
    def count(self) -> int:
        return self.centers.shape[0]

    @property
    def distinct_count(self) -> int:
        return np.unique(self.centers, axis=0).shape[0]


def orbit_of_ball(center, epsilon: float, transforms: Sequence[GridTransform]) -> Orbit:
    """Images of the ball's center under every transform; the ball radius rides along."""
    if not epsilon > 0:
        raise RejectedInputError("epsilon must be positive")
    y = np.asarray(center, dtype=np.float64).ravel()
    if transforms and y.size != transforms[0].size:
        raise RejectedInputError("center size does not match the grid")
    centers = np.stack([t.apply_flat(y) for t in transforms]) if transforms else np.empty((0, y.size))
    return Orbit(centers, float(epsilon))


def nearest_orbit_distance(z, orbit: Orbit) -> float:
    if orbit.count == 0:
        raise RejectedInputError("empty orbit")
    z = np.asarray(z, dtype=np.float64).ravel()
    if z.size != orbit.centers.shape[1]:
        raise RejectedInputError("dimension mismatch")
    # Per-center norms round exactly like a direct norm(z - y), so the
    # identity member never loses to |z - y| by an ulp.
    return min(float(np.linalg.norm(z - c)) for c in orbit.centers)


class SymmetryClass(enum.Enum):
    """How the number of label-preserving permutations grows with input dimension k."""

    IMAGE_POLY = "image_poly"
    GRAPH_FACTORIAL = "graph_factorial"

    def log_count(self, k: float) -> float:
        if k < 1:
            raise RejectedInputError("k must be >= 1")
        if self is SymmetryClass.IMAGE_POLY:
            return 2.0 * math.log(k)
        return float(gammaln(k + 1.0))
