"""Usefulness of scalar features for binary labels, with and without L-inf perturbation.

``rho`` is the empirical mean of ``y * feature(x)``. ``gamma`` replaces each
term by its minimum over perturbations within the L-inf ball (clipped to the
unit cube): all corners plus the unperturbed point when the dimension is at
most 12, coordinate descent over {-r, 0, +r} per coordinate beyond that.
The heuristic search can only overestimate the true minimum.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .core import RejectedInputError, seeded_stream

Feature = Callable[[np.ndarray], np.ndarray]

EXACT_MAX_DIM = 12
FRAGILITY_HEADER = ("feature", "rho", "gamma", "gap", "exact")


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.points, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.float64).ravel()
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] != y.shape[0]:
            raise RejectedInputError(f"{X.shape[0]} points but {y.shape[0]} labels")
        if set(np.unique(y).tolist()) <= {0.0, 1.0} and y.size and (y == 0).any():
            y = 2.0 * y - 1.0
        if not np.all((y == 1.0) | (y == -1.0)):
            raise RejectedInputError("labels must be -1/+1 (or 0/1)")
        if not np.all((X >= 0.0) & (X <= 1.0)):
            raise RejectedInputError("points must lie in the unit cube")
        object.__setattr__(self, "points", X)
        object.__setattr__(self, "labels", y)

    @property
    def size(self) -> int:
        return self.labels.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_csv(cls, path) -> "LabeledDataset":
        """Read columns ``x0..x{d-1},y``."""
        with open(Path(path), newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            d = len(header) - 1
            if header != [f"x{i}" for i in range(d)] + ["y"]:
                raise RejectedInputError(f"unexpected dataset header {header}")
            rows = [[float(v) for v in row] for row in reader if row]
        arr = np.array(rows, dtype=np.float64).reshape(-1, d + 1)
        return cls(arr[:, :d], arr[:, d])

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"x{i}" for i in range(self.dim)] + ["y"])
            for x, y in zip(self.points, self.labels):
                writer.writerow([repr(float(v)) for v in x] + [int(y)])


@dataclass(frozen=True)
class PerturbationSet:
    radius: float = 0.0
    norm: str = "linf"
    search: str = "corners_plus_coordinate_descent"

    def __post_init__(self):
        if not self.radius >= 0:
            raise RejectedInputError("radius must be >= 0")
        if self.norm != "linf":
            raise RejectedInputError("only the L-inf perturbation set is supported")


@dataclass(frozen=True)
class FeatureUsefulness:
    feature_id: str
    rho: float
    gamma: float
    delta_spec: PerturbationSet
    exact: bool

    @property
    def gap(self) -> float:
        return self.rho - self.gamma

    def row(self):
        return self.feature_id, self.rho, self.gamma, self.gap, self.exact


def _values(feature: Feature, X: np.ndarray) -> np.ndarray:
    return np.asarray(feature(X), dtype=np.float64).reshape(X.shape[0])


def rho_useful(feature: Feature, data: LabeledDataset) -> float:
    if data.size == 0:
        raise RejectedInputError("empty dataset")
    return float(np.mean(data.labels * _values(feature, data.points)))


def _perturbed(X, delta):
    out = np.clip(X + delta, 0.0, 1.0)
    assert np.all((out >= 0.0) & (out <= 1.0))
    return out


def worst_case_terms(
    feature: Feature, data: LabeledDataset, delta: PerturbationSet, coord_iters: int = 3
) -> np.ndarray:
    """Per-point minimum of ``y * feature(x + d)`` found by the search."""
    X, y = data.points, data.labels
    best = y * _values(feature, X)
    r = delta.radius
    if r == 0:
        return best
    if data.dim <= EXACT_MAX_DIM:
        for signs in itertools.product((-1.0, 1.0), repeat=data.dim):
            cand = y * _values(feature, _perturbed(X, r * np.array(signs)))
            np.minimum(best, cand, out=best)
        return best
    offsets = np.zeros_like(X)
    for _ in range(coord_iters):
        for j in range(data.dim):
            keep = offsets[:, j].copy()
            for step in (-r, 0.0, r):
                offsets[:, j] = step
                cand = y * _values(feature, _perturbed(X, offsets))
                better = cand < best
                best = np.where(better, cand, best)
                keep = np.where(better, step, keep)
            offsets[:, j] = keep
    return best


def gamma_robust(
    feature: Feature, data: LabeledDataset, delta: PerturbationSet, coord_iters: int = 3
) -> float:
    if data.size == 0:
        raise RejectedInputError("empty dataset")
    return float(np.mean(worst_case_terms(feature, data, delta, coord_iters)))


def fragility_scan(
    features: Mapping[str, Feature], data: LabeledDataset, delta: PerturbationSet,
    coord_iters: int = 3,
) -> list[FeatureUsefulness]:
    """rho and gamma per feature, largest rho - gamma first (ties by name)."""
    if not features:
        raise RejectedInputError("no features given")
    exact = data.dim <= EXACT_MAX_DIM or delta.radius == 0
    rows = [
        FeatureUsefulness(
            name, rho_useful(f, data), gamma_robust(f, data, delta, coord_iters), delta, exact
        )
        for name, f in features.items()
    ]
    return sorted(rows, key=lambda u: (-u.gap, u.feature_id))


def uniform_sign_dataset(size: int, seed: int = 0, dim: int = 1) -> LabeledDataset:
    """Uniform points with ``y = sign(x0 - 0.5)`` (x0 == 0.5 maps to -1)."""
    X = seeded_stream(seed, 0).random((size, dim))
    return LabeledDataset(X, np.where(X[:, 0] > 0.5, 1.0, -1.0))


def sign_feature(axis: int = 0) -> Feature:
    return lambda X: np.sign(X[:, axis] - 0.5)


def smooth_feature(axis: int = 0) -> Feature:
    return lambda X: 2.0 * X[:, axis] - 1.0
