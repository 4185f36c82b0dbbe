"""Points, classifiers and the deterministic random streams shared by every module.

Classifiers are evaluated in batches: ``predict`` takes an ``(N, dim)`` array of
points in the unit hypercube and returns ``N`` integer labels. Single points go
through ``__call__``. Whenever a comparison ties exactly, the lowest label wins.
"""

from __future__ import annotations

import os
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

__all__ = [
    "RejectedInputError",
    "Point",
    "as_points",
    "check_point",
    "DecisionFunction",
    "SoftDecisionFunction",
    "VectorizedClassifier",
    "ConstantClassifier",
    "ThresholdClassifier",
    "MeanThresholdClassifier",
    "LinearFeatureClassifier",
    "ACTIVATIONS",
    "coordinate",
    "evaluate_linear",
    "seeded_stream",
    "resolve_threads",
    "parallel_map",
]

_T = TypeVar("_T")
_R = TypeVar("_R")


class RejectedInputError(ValueError):
    """Raised when an operation receives input outside its contract."""


@dataclass(frozen=True)
class Point:
    """An element of the closed unit hypercube."""

    coords: tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if not coords:
            raise RejectedInputError("a point needs at least one coordinate")
        if any(not (0.0 <= c <= 1.0) for c in coords):
            raise RejectedInputError(f"coordinates must lie in [0, 1]: {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=np.float64)


def check_point(x, dim: int | None = None) -> np.ndarray:
    """Return ``x`` as a float64 vector, rejecting wrong sizes and values outside [0, 1]."""
    if isinstance(x, Point):
        arr = x.as_array()
    else:
        arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1 or arr.size == 0:
        raise RejectedInputError(f"expected a non-empty coordinate vector, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise RejectedInputError(f"dimension mismatch: expected {dim}, got {arr.size}")
    if not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise RejectedInputError("coordinates must lie in [0, 1]")
    return arr


def as_points(X, dim: int) -> np.ndarray:
    """Coerce a batch of points to an ``(N, dim)`` float64 array."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, dim) if dim > 1 else arr[:, None]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise RejectedInputError(f"dimension mismatch: expected (N, {dim}), got {arr.shape}")
    return arr


class DecisionFunction(ABC):
    """Deterministic label map over the unit hypercube of dimension ``dim``.

    Subclasses implement :meth:`predict` and must keep it pure: no state may
    change between calls, so instances can be shared across threads.
    """

    dim: int
    labels: int

    @abstractmethod
    def predict(self, X: np.ndarray) -> np.ndarray:
        """Labels for an ``(N, dim)`` batch, as an int64 array of length N."""

    def __call__(self, x) -> int:
        arr = check_point(x, self.dim)
        return int(self.predict(arr[None, :])[0])


class SoftDecisionFunction(ABC):
    """Map from points to probability vectors of length ``labels``."""

    dim: int
    labels: int

    @abstractmethod
    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Probabilities for an ``(N, dim)`` batch, shape ``(N, labels)``."""

    def hard(self) -> DecisionFunction:
        """Argmax of the probabilities, ties to the lowest label."""
        return VectorizedClassifier(
            lambda X: np.argmax(self.predict_proba(X), axis=1), self.dim, self.labels
        )


class VectorizedClassifier(DecisionFunction):
    """Wrap a vectorized callable ``(N, dim) -> (N,)`` labels."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], dim: int, labels: int):
        if dim < 1 or labels < 1:
            raise RejectedInputError("dim and labels must be positive")
        self._fn = fn
        self.dim = dim
        self.labels = labels

    def predict(self, X):
        X = as_points(X, self.dim)
        return np.asarray(self._fn(X), dtype=np.int64)


class ConstantClassifier(DecisionFunction):
    def __init__(self, dim: int, label: int = 0, labels: int = 2):
        if not 0 <= label < labels:
            raise RejectedInputError("label out of range")
        self.dim = dim
        self.labels = labels
        self.label = label

    def predict(self, X):
        X = as_points(X, self.dim)
        return np.full(X.shape[0], self.label, dtype=np.int64)


class ThresholdClassifier(DecisionFunction):
    """Label 1 where ``x[axis] > threshold``, else 0.

    With ``dim=1`` this is the 1-D threshold, with ``dim=2, axis=0`` the
    half-plane used throughout the tests.
    """

    def __init__(self, dim: int = 1, threshold: float = 0.5, axis: int = 0):
        if not 0 <= axis < dim:
            raise RejectedInputError("axis out of range")
        self.dim = dim
        self.labels = 2
        self.threshold = float(threshold)
        self.axis = axis

    def predict(self, X):
        X = as_points(X, self.dim)
        return (X[:, self.axis] > self.threshold).astype(np.int64)

    def distance(self, X) -> np.ndarray:
        """Exact Euclidean distance to the boundary hyperplane."""
        X = as_points(X, self.dim)
        return np.abs(X[:, self.axis] - self.threshold)


class MeanThresholdClassifier(DecisionFunction):
    """Label 1 where the coordinate mean exceeds ``threshold``. Permutation invariant."""

    def __init__(self, dim: int, threshold: float = 0.5):
        self.dim = dim
        self.labels = 2
        self.threshold = float(threshold)

    def predict(self, X):
        X = as_points(X, self.dim)
        return (X.mean(axis=1) > self.threshold).astype(np.int64)


def _logistic(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


ACTIVATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "identity": lambda z: z,
    "logistic": _logistic,
    "tanh": np.tanh,
}


def coordinate(i: int) -> Callable[[np.ndarray], np.ndarray]:
    """Feature map returning coordinate ``i`` of each point."""

    def feature(X):
        return X[:, i]

    feature.__name__ = f"x{i}"
    return feature


@dataclass(frozen=True)
class LinearFeatureClassifier(DecisionFunction):
    """``sign(b + act(sum_i w_i f_i(x)))`` mapped to labels {0, 1}.

    Feature maps take an ``(N, dim)`` batch and return ``N`` reals. A zero
    argument falls to label 0.
    """

    features: Sequence[Callable[[np.ndarray], np.ndarray]]
    weights: Sequence[float]
    bias: float = 0.0
    activation: str = "identity"
    dim: int = 1
    labels: int = field(default=2, init=False)

    def __post_init__(self):
        if len(self.features) != len(self.weights):
            raise RejectedInputError(
                f"{len(self.weights)} weights for {len(self.features)} feature maps"
            )
        if self.activation not in ACTIVATIONS:
            raise RejectedInputError(
                f"unknown activation {self.activation!r}; choose from {sorted(ACTIVATIONS)}"
            )
        if self.dim < 1:
            raise RejectedInputError("dim must be positive")
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def pre_activation(self, X) -> np.ndarray:
        X = as_points(X, self.dim)
        total = np.zeros(X.shape[0])
        for w, f in zip(self.weights, self.features):
            total = total + w * np.asarray(f(X), dtype=np.float64)
        return total

    def decision_value(self, X) -> np.ndarray:
        return self.bias + ACTIVATIONS[self.activation](self.pre_activation(X))

    def predict(self, X):
        return (self.decision_value(X) > 0.0).astype(np.int64)


def evaluate_linear(c: LinearFeatureClassifier, x) -> int:
    return c(x)


def seeded_stream(seed: int, stream_id: int) -> np.random.Generator:
    """Independent random stream keyed by ``(seed, stream_id)``.

    Backed by the Philox counter-based generator with the two integers as its
    128-bit key, so a stream never depends on which other streams were drawn
    or in what order.
    """
    mask = (1 << 64) - 1
    key = np.array([seed & mask, stream_id & mask], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def resolve_threads(threads: int | str | None) -> int:
    if threads is None or threads == "auto":
        return os.cpu_count() or 1
    n = int(threads)
    if n < 1:
        raise RejectedInputError("threads must be >= 1 or 'auto'")
    return n


def parallel_map(fn: Callable[[_T], _R], items: Iterable[_T], threads: int = 1) -> list[_R]:
    """Ordered map; results never depend on the thread count."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
