"""Label-only boundary attack against a query-counting, throttled oracle.

The attacker sees nothing but labels. Phase one bisects the segment between
the original point and a seed point with another label. Phase two repeatedly
steps the current adversarial point along a random direction orthogonal to
its offset from the original, checks the label, and bisects back toward the
original. The oracle wrapper, not the attacker, enforces the query budget.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import DecisionFunction, RejectedInputError, check_point, parallel_map, seeded_stream

TRACE_HEADER = ("query_index", "best_distance")
SWEEP_HEADER = ("budget", "mean_final_distance", "success_rate", "seeds")


class BudgetExhausted(RuntimeError):
    """The oracle refused a query: the hard budget is spent."""


class RateLimited(BudgetExhausted):
    """The oracle refused a query: too many queries in the current window."""


@dataclass(frozen=True)
class ThrottlePolicy:
    """Hard query budget plus an optional rate limit.

    The rate limit runs on a logical clock the attacker advances once per
    attack round: at most ``window_limit`` queries may fall within any
    ``window_size`` consecutive rounds.
    """

    max_queries: int
    window_size: int | None = None
    window_limit: int | None = None

    def __post_init__(self):
        if self.max_queries < 0:
            raise RejectedInputError("max_queries must be >= 0")
        if (self.window_size is None) != (self.window_limit is None):
            raise RejectedInputError("window_size and window_limit go together")
        if self.window_size is not None and (self.window_size < 1 or self.window_limit < 0):
            raise RejectedInputError("window_size must be >= 1 and window_limit >= 0")


class CountingOracle(DecisionFunction):
    """Wrap a classifier so every evaluated point is counted against a policy.

    Holds a mutable counter, so each attack needs its own instance.
    """

    def __init__(self, f: DecisionFunction, policy: ThrottlePolicy):
        self.inner = f
        self.policy = policy
        self.dim = f.dim
        self.labels = f.labels
        self.count = 0
        self.clock = 0
        self._recent: deque[tuple[int, int]] = deque()

    def tick(self) -> None:
        self.clock += 1

    def _window_used(self) -> int:
        size = self.policy.window_size
        while self._recent and self._recent[0][0] <= self.clock - size:
            self._recent.popleft()
        return sum(n for _, n in self._recent)

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        n = 1 if X.ndim == 1 else X.shape[0]
        if self.count + n > self.policy.max_queries:
            raise BudgetExhausted(f"query budget of {self.policy.max_queries} spent")
        if self.policy.window_size is not None:
            if self._window_used() + n > self.policy.window_limit:
                raise RateLimited(
                    f"more than {self.policy.window_limit} queries in {self.policy.window_size} rounds"
                )
            self._recent.append((self.clock, n))
        self.count += n
        return self.inner.predict(X)


def counting_oracle(f: DecisionFunction, policy: ThrottlePolicy) -> CountingOracle:
    return CountingOracle(f, policy)


@dataclass(eq=False)
class AttackTrace:
    query_log: list[tuple[int, float]]
    final_distance: float
    success: bool
    queries_used: int
    seed: int
    adversarial: np.ndarray = field(repr=False)
    verified: bool = False

    def rows(self):
        return iter(self.query_log)


def boundary_attack(
    f: DecisionFunction, x_orig, x_seed, tolerance: float, policy: ThrottlePolicy,
    seed: int = 0, max_rounds: int = 10**6, step_scale: float = 0.1,
    step_floor: float = 1e-6, patience: int = 3,
) -> AttackTrace:
    """Search for the adversarial point closest to ``x_orig`` within the query budget.

    ``success`` means the first bisection closed its bracket to ``tolerance``.
    A successful result is re-checked against the unwrapped classifier
    without spending budget.
    """
    if not tolerance > 0:
        raise RejectedInputError("tolerance must be positive")
    oracle = f if isinstance(f, CountingOracle) else CountingOracle(f, policy)
    plain = oracle.inner
    x_orig = check_point(x_orig, oracle.dim)
    x_seed = check_point(x_seed, oracle.dim)
    rng = seeded_stream(seed, 0)

    log: list[tuple[int, float]] = []
    best = float(np.linalg.norm(x_seed - x_orig))
    best_point = x_seed
    success = False

    def ask(x) -> int:
        return oracle(x)

    def record():
        log.append((oracle.count, best))

    def bisect(target, label0):
        """Bisect [x_orig, target] (target adversarial), updating the best point."""
        nonlocal best, best_point
        delta = target - x_orig
        length = float(np.linalg.norm(delta))
        lo, hi = 0.0, 1.0
        while (hi - lo) * length > tolerance:
            mid = 0.5 * (lo + hi)
            point = x_orig + mid * delta
            if ask(point) == label0:
                lo = mid
            else:
                hi = mid
                if mid * length < best:
                    best, best_point = mid * length, point
            record()

    try:
        label0 = ask(x_orig)
        record()
        label_seed = ask(x_seed)
        record()
        if label_seed == label0:
            raise RejectedInputError("x_orig and x_seed share a label")
        bisect(x_seed, label0)
        success = True

        scale, failures = step_scale, 0
        for _ in range(max_rounds if oracle.dim > 1 else 0):
            oracle.tick()
            offset = best_point - x_orig
            dist = float(np.linalg.norm(offset))
            axis = offset / dist
            u = rng.standard_normal(oracle.dim)
            u -= (u @ axis) * axis
            norm = float(np.linalg.norm(u))
            if norm == 0.0:
                continue
            eta = max(scale * dist, step_floor)
            cand = np.clip(best_point + (eta / norm) * u, 0.0, 1.0)
            before = best
            if ask(cand) != label0:
                if float(np.linalg.norm(cand - x_orig)) < best:
                    best, best_point = float(np.linalg.norm(cand - x_orig)), cand
                record()
                bisect(cand, label0)
            else:
                record()
            if best < before:
                failures = 0
            else:
                failures += 1
                if failures >= patience:
                    scale, failures = scale / 2.0, 0
    except BudgetExhausted:
        pass

    verified = bool(success and plain(best_point) != plain(x_orig))
    return AttackTrace(log, best, success, oracle.count, seed, best_point, verified)


@dataclass(frozen=True)
class SweepRow:
    budget: int
    mean_final_distance: float
    success_rate: float
    seeds: int

    def row(self):
        return self.budget, self.mean_final_distance, self.success_rate, self.seeds


def sweep_traces(
    f: DecisionFunction, x_orig, x_seed, tolerance: float, budgets: Sequence[int],
    seeds: Sequence[int] = (0,), threads: int = 1, window_size: int | None = None,
    window_limit: int | None = None, **attack_kwargs,
) -> dict[tuple[int, int], AttackTrace]:
    """One independent attack per (budget, seed) cell, each with a private oracle."""
    budgets = [int(b) for b in budgets]
    if not budgets or any(b <= a for a, b in zip(budgets, budgets[1:])):
        raise RejectedInputError("budgets must be non-empty and increasing")
    if not seeds:
        raise RejectedInputError("need at least one seed")
    cells = [(b, int(s)) for b in budgets for s in seeds]

    def run(cell):
        policy = ThrottlePolicy(cell[0], window_size, window_limit)
        return boundary_attack(f, x_orig, x_seed, tolerance, policy, cell[1], **attack_kwargs)

    return dict(zip(cells, parallel_map(run, cells, threads)))


def summarize(traces: dict[tuple[int, int], AttackTrace]) -> list[SweepRow]:
    budgets = sorted({b for b, _ in traces})
    rows = []
    for b in budgets:
        group = [t for (bb, _), t in traces.items() if bb == b]
        rows.append(SweepRow(
            b,
            float(np.mean([t.final_distance for t in group])),
            float(np.mean([t.success for t in group])),
            len(group),
        ))
    return rows


def budget_sweep(
    f: DecisionFunction, x_orig, x_seed, tolerance: float, budgets: Sequence[int],
    seeds: Sequence[int] = (0,), threads: int = 1, **attack_kwargs,
) -> list[SweepRow]:
    """Attack outcome per budget, averaged over seeds (the same seeds for every budget)."""
    return summarize(sweep_traces(f, x_orig, x_seed, tolerance, budgets, seeds, threads, **attack_kwargs))
