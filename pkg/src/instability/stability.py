"""Empirical epsilon-stability: finite probing of balls, Monte Carlo unstable mass, bisection to the boundary.

"Stable" here always means "no label change found by the probes", never a
proof. Probes are ``directions`` random unit vectors times ``steps`` radii
evenly spaced in (0, epsilon], clipped to the unit cube.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import binomtest

from .core import DecisionFunction, RejectedInputError, check_point, parallel_map, seeded_stream

# Samples per random stream. Fixed so results never depend on the thread count.
CHUNK_SIZE = 1024
_MAX_PROBES_PER_BATCH = 1 << 20


@dataclass(frozen=True)
class StabilityReport:
    epsilon: float
    samples: int
    unstable_count: int
    unstable_fraction: float
    ci_low: float
    ci_high: float
    seed: int
    directions: int
    steps: int

    @property
    def wilson_ci_95(self) -> tuple[float, float]:
        return self.ci_low, self.ci_high

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class BoundaryDistanceEstimate:
    point: np.ndarray
    distance: float
    direction: np.ndarray
    queries_used: int
    tolerance: float
    bracket: tuple[float, float]
    verify_queries: int = 2

    @property
    def total_queries(self) -> int:
        return self.queries_used + self.verify_queries


def _unit_directions(rng: np.random.Generator, n: int, directions: int, dim: int) -> np.ndarray:
    u = rng.standard_normal((n, directions, dim))
    return u / np.linalg.norm(u, axis=2, keepdims=True)


def _probe_unstable(f, X, epsilon, dirs, steps) -> np.ndarray:
    n, dim = X.shape
    radii = epsilon * np.arange(1, steps + 1, dtype=np.float64) / steps
    base = f.predict(X)
    flipped = np.zeros(n, dtype=bool)
    per_point = dirs.shape[1] * steps
    batch = max(1, _MAX_PROBES_PER_BATCH // (per_point * dim))
    for s in range(0, n, batch):
        x = X[s : s + batch]
        probes = x[:, None, None, :] + radii[None, None, :, None] * dirs[s : s + batch, :, None, :]
        np.clip(probes, 0.0, 1.0, out=probes)
        labels = f.predict(probes.reshape(-1, dim)).reshape(len(x), per_point)
        flipped[s : s + batch] = (labels != base[s : s + batch, None]).any(axis=1)
    return flipped


def _check_probe_args(epsilon, directions, steps):
    if not epsilon > 0:
        raise RejectedInputError("epsilon must be positive")
    if directions < 1 or steps < 1:
        raise RejectedInputError("directions and steps must be >= 1")


def is_epsilon_stable(
    f: DecisionFunction, x, epsilon: float, directions: int = 32, steps: int = 8,
    seed: int = 0, stream_id: int = 0,
) -> bool:
    _check_probe_args(epsilon, directions, steps)
    x = check_point(x, f.dim)
    dirs = _unit_directions(seeded_stream(seed, stream_id), 1, directions, f.dim)
    return not bool(_probe_unstable(f, x[None, :], epsilon, dirs, steps)[0])


def wilson_interval(count: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(count, n).proportion_ci(confidence_level=confidence, method="wilson")
    frac = count / n
    return min(float(ci.low), frac), max(float(ci.high), frac)


def unstable_fraction(
    f: DecisionFunction, epsilon: float, samples: int = 100_000, directions: int = 32,
    steps: int = 8, seed: int = 0, threads: int = 1,
) -> StabilityReport:
    """Monte Carlo share of uniform points in the unit cube that are not epsilon-stable."""
    _check_probe_args(epsilon, directions, steps)
    if samples < 1:
        raise RejectedInputError("samples must be >= 1")

    def chunk(index):
        n = min(CHUNK_SIZE, samples - index * CHUNK_SIZE)
        rng = seeded_stream(seed, index)
        X = rng.random((n, f.dim))
        dirs = _unit_directions(rng, n, directions, f.dim)
        return int(_probe_unstable(f, X, epsilon, dirs, steps).sum())

    n_chunks = -(-samples // CHUNK_SIZE)
    count = sum(parallel_map(chunk, range(n_chunks), threads))
    low, high = wilson_interval(count, samples)
    return StabilityReport(
        float(epsilon), samples, count, count / samples, low, high, seed, directions, steps
    )


def distance_to_boundary(f: DecisionFunction, x, x_adv, tolerance: float) -> BoundaryDistanceEstimate:
    """Bisect the segment [x, x_adv] until the label-change bracket is within ``tolerance``.

    ``queries_used`` counts bisection evaluations; the two endpoint checks are
    reported separately in ``verify_queries``.
    """
    if not tolerance > 0:
        raise RejectedInputError("tolerance must be positive")
    x = check_point(x, f.dim)
    x_adv = check_point(x_adv, f.dim)
    label = f(x)
    if f(x_adv) == label:
        raise RejectedInputError("segment endpoints share a label")
    delta = x_adv - x
    length = float(np.linalg.norm(delta))
    lo, hi = 0.0, 1.0
    queries = 0
    while (hi - lo) * length > tolerance:
        mid = 0.5 * (lo + hi)
        queries += 1
        if f(x + mid * delta) == label:
            lo = mid
        else:
            hi = mid
    return BoundaryDistanceEstimate(
        point=x + lo * delta,
        distance=lo * length,
        direction=delta / length,
        queries_used=queries,
        tolerance=float(tolerance),
        bracket=(lo * length, hi * length),
    )
