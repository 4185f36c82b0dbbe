"""Log-space volume bounds for orbits of epsilon-balls.

Every quantity is a natural log: ball volumes fall below the float range
once k reaches a few hundred, and the curves of interest run to k ~ 1e4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from scipy.special import gammaln

from .core import RejectedInputError
from .symmetry import SymmetryClass

LOG_PI = math.log(math.pi)

BOUND_HEADER = (
    "k", "epsilon", "log_sym_count", "log_ball_volume", "log_orbit_bound", "log_orbit_bound_capped",
)
MITIGATION_HEADER = ("m", "channels") + BOUND_HEADER


@dataclass(frozen=True)
class BoundCurvePoint:
    k: int
    epsilon: float
    log_ball_volume: float
    log_sym_count: float

    @property
    def log_orbit_bound(self) -> float:
        return self.log_sym_count + self.log_ball_volume

    @property
    def log_orbit_bound_capped(self) -> float:
        # The unit cube has measure 1.
        return min(self.log_orbit_bound, 0.0)

    def row(self):
        return (
            self.k, self.epsilon, self.log_sym_count, self.log_ball_volume,
            self.log_orbit_bound, self.log_orbit_bound_capped,
        )


def _check(k, epsilon):
    if k < 1 or int(k) != k:
        raise RejectedInputError(f"k must be a positive integer, got {k!r}")
    if not epsilon > 0:
        raise RejectedInputError(f"epsilon must be positive, got {epsilon!r}")


def log_ball_volume(k: int, epsilon: float) -> float:
    """ln of the volume of a radius-epsilon Euclidean ball in k dimensions."""
    _check(k, epsilon)
    return 0.5 * k * LOG_PI - float(gammaln(0.5 * k + 1.0)) + k * math.log(epsilon)


def _sym(sym) -> SymmetryClass:
    return sym if isinstance(sym, SymmetryClass) else SymmetryClass(sym)


def orbit_volume_bound(k: int, epsilon: float, sym, feature_dim: int | None = None) -> float:
    return _point(k, epsilon, _sym(sym), feature_dim).log_orbit_bound


def feature_preimage_factor(k: int, r: int) -> float:
    """Average number of input points behind one feature vector, k / r."""
    if not (1 <= r <= k):
        raise RejectedInputError(f"need 1 <= r <= k, got k={k}, r={r}")
    return k / r


def _point(k, epsilon, sym: SymmetryClass, feature_dim) -> BoundCurvePoint:
    _check(k, epsilon)
    log_sym = sym.log_count(k)
    if feature_dim is not None:
        # r feature points each pulling back to k/r inputs: k extra balls.
        log_sym += math.log(feature_preimage_factor(k, feature_dim) * feature_dim)
    return BoundCurvePoint(int(k), float(epsilon), log_ball_volume(k, epsilon), log_sym)


def bound_curve(
    k_range: Iterable[int], epsilon: float, sym, feature_dim: int | None = None
) -> list[BoundCurvePoint]:
    """Orbit-volume bound per k; ``feature_dim`` adds the feature-preimage multiplicity."""
    ks = [int(k) for k in k_range]
    if not ks:
        raise RejectedInputError("k_range is empty")
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise RejectedInputError("k_range must be increasing")
    sym = _sym(sym)
    return [_point(k, epsilon, sym, feature_dim) for k in ks]


def resolution_mitigation_curve(
    m_range: Iterable[int], channels: int = 3, epsilon: float = 0.1
) -> list[tuple[int, int, BoundCurvePoint]]:
    """Image-class bound as the grid side m grows, with k = channels * m^2."""
    ms = [int(m) for m in m_range]
    if channels not in (1, 3):
        raise RejectedInputError("channels must be 1 or 3")
    if not ms or any(b <= a for a, b in zip(ms, ms[1:])):
        raise RejectedInputError("m_range must be non-empty and increasing")
    curve = bound_curve([channels * m * m for m in ms], epsilon, SymmetryClass.IMAGE_POLY)
    return [(m, channels, p) for m, p in zip(ms, curve)]


def tail_is_monotone(values: Sequence[float], decreasing: bool = True) -> bool:
    """Strict monotonicity over the second half of ``values``."""
    tail = list(values)[len(values) // 2 :]
    pairs = zip(tail, tail[1:])
    if decreasing:
        return all(b < a for a, b in pairs)
    return all(b > a for a, b in pairs)
