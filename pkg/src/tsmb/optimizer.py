"""DIRECT (DIviding RECTangles) maximisation over an integer box.

The search runs on the unit hypercube.  Rectangle centres are rounded onto the
integer lattice before the objective is called and every lattice point is
evaluated at most once.  A dimension stops being divided once a rectangle is
narrower than one lattice step along it, which makes the run terminate on
small boxes without burning the iteration cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .dataset import DelayVector
from .errors import ConfigError, OptimizationError, TsmbError

DEFAULT_BUDGET = 2000
DEFAULT_EPS = 1e-4


@dataclass(frozen=True)
class SearchBox:
    """Integer bounds; by convention the last dimension is the smoothing window."""

    lower: tuple
    upper: tuple
    budget: int = DEFAULT_BUDGET
    max_iterations: int = 10_000

    def __post_init__(self):
        lo = tuple(int(v) for v in self.lower)
        hi = tuple(int(v) for v in self.upper)
        if not lo or len(lo) != len(hi):
            raise ConfigError("search box needs matching, non-empty lower/upper bounds")
        if any(a > b for a, b in zip(lo, hi)):
            raise ConfigError(f"search box has lower > upper: {lo} vs {hi}")
        if int(self.budget) < 1 or int(self.max_iterations) < 1:
            raise ConfigError("budget and max_iterations must be >= 1")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def for_delays(cls, delay_lower, delay_upper, window=(1, 1), n_features: Optional[int] = None,
                   budget: int = DEFAULT_BUDGET, max_iterations: int = 10_000) -> "SearchBox":
        """Box over ``n`` delays plus one window dimension.  Scalar bounds are broadcast."""
        if np.isscalar(delay_lower):
            delay_lower = [delay_lower] * (n_features or 1)
        if np.isscalar(delay_upper):
            delay_upper = [delay_upper] * len(delay_lower)
        if any(v < 0 for v in delay_lower):
            raise ConfigError("delay bounds must be non-negative")
        if window[0] < 1:
            raise ConfigError("window lower bound must be >= 1")
        return cls(tuple(delay_lower) + (window[0],), tuple(delay_upper) + (window[1],),
                   budget=budget, max_iterations=max_iterations)

    @property
    def n_delays(self) -> int:
        return len(self.lower) - 1

    @property
    def window_range(self) -> tuple:
        return self.lower[-1], self.upper[-1]

    @property
    def lattice_size(self) -> int:
        return math.prod(b - a + 1 for a, b in zip(self.lower, self.upper))

    def contains(self, point) -> bool:
        return all(a <= p <= b for a, p, b in zip(self.lower, point, self.upper))

    def center(self) -> tuple:
        return tuple(a + int(math.floor((b - a) * 0.5 + 0.5)) for a, b in zip(self.lower, self.upper))


@dataclass
class OptimizationResult:
    best_point: tuple
    best_score: float
    evaluations: int
    iterations: int
    trace: list = field(default_factory=list)  # (point, score) in evaluation order
    seed: int = 0

    @property
    def best_delay(self) -> DelayVector:
        return DelayVector.from_point(self.best_point)


class _BudgetExhausted(Exception):
    pass


def direct_maximize(objective: Callable[[tuple], float], box: SearchBox, seed: int = 0,
                    eps: float = DEFAULT_EPS) -> OptimizationResult:
    """Maximise ``objective`` over the integer points of ``box`` with DIRECT.

    The algorithm is deterministic; ``seed`` is accepted for interface symmetry
    with the stochastic steps around it and is recorded on the result.
    Ties between potentially optimal rectangles go to the oldest rectangle.
    """
    lower = np.asarray(box.lower, dtype=float)
    span = np.asarray(box.upper, dtype=float) - lower
    free = np.flatnonzero(span > 0)
    total = box.lattice_size
    cache: dict = {}
    trace: list = []

    def lattice(x: np.ndarray) -> tuple:
        full = lower.copy()
        full[free] += np.floor(np.clip(x, 0.0, 1.0) * span[free] + 0.5)
        return tuple(int(v) for v in full)

    def f(x: np.ndarray) -> float:
        """Negated objective (the search minimises)."""
        point = lattice(x)
        value = cache.get(point)
        if value is None:
            if len(cache) >= box.budget:
                raise _BudgetExhausted
            try:
                value = float(objective(point))
            except TsmbError as exc:
                raise OptimizationError(f"objective failed at {point}: {exc}", point=point) from exc
            except Exception as exc:
                raise OptimizationError(f"objective failed at {point}: {exc!r}", point=point) from exc
            if not math.isfinite(value):
                raise OptimizationError(f"objective returned {value} at {point}", point=point)
            cache[point] = value
            trace.append((point, value))
        return -value

    dim = free.shape[0]
    fspan = span[free]
    centers = [np.full(dim, 0.5)]
    levels = [np.zeros(dim, dtype=int)]  # side length along d is 3 ** -level
    iterations = 0
    try:
        fvals = [f(centers[0])]
        while dim and len(cache) < total and iterations < box.max_iterations:
            sides = 3.0 ** -np.asarray(levels)
            splittable = sides * fspan >= 1.0
            active = np.flatnonzero(splittable.any(axis=1))
            if active.size == 0:
                break
            chosen = _potentially_optimal(active, sides, np.asarray(fvals), eps)
            iterations += 1
            for j in chosen:
                _divide(j, centers, levels, fvals, splittable[j], f)
    except _BudgetExhausted:
        pass

    best_point, best_score = max(trace, key=lambda pv: pv[1])  # first maximum wins
    return OptimizationResult(best_point=best_point, best_score=best_score, evaluations=len(cache),
                              iterations=iterations, trace=trace, seed=seed)


def _potentially_optimal(active: np.ndarray, sides: np.ndarray, fvals: np.ndarray, eps: float):
    """Indices of rectangles on the lower-right convex hull of (diameter, value)."""
    diam = 0.5 * np.sqrt((sides[active] ** 2).sum(axis=1))
    diam = np.round(diam, 12)
    vals = fvals[active]
    # best rectangle per distinct diameter, lowest index on ties
    order = np.lexsort((active, vals, diam))
    d_sorted = diam[order]
    first = np.flatnonzero(np.r_[True, d_sorted[1:] != d_sorted[:-1]])
    reps = order[first]
    d = diam[reps]
    v = vals[reps]
    fmin = float(vals.min())
    chosen = []
    for g in range(d.shape[0]):
        k_low = max(((v[g] - v[i]) / (d[g] - d[i]) for i in range(g)), default=-np.inf)
        k_up = min(((v[i] - v[g]) / (d[i] - d[g]) for i in range(g + 1, d.shape[0])), default=np.inf)
        if k_low > k_up:
            continue
        if math.isfinite(k_up):
            if v[g] - k_up * d[g] > fmin - eps * abs(fmin):
                continue
        chosen.append(int(active[reps[g]]))
    return sorted(chosen)


def _divide(j, centers, levels, fvals, splittable, f):
    """Trisect rectangle ``j`` along its longest splittable sides, best-first."""
    lev = levels[j]
    top = lev[splittable].min()
    dims = np.flatnonzero(splittable & (lev == top))
    delta = 3.0 ** -(top + 1)
    c = centers[j]
    probes = []
    for d in dims:
        up = c.copy()
        up[d] += delta
        down = c.copy()
        down[d] -= delta
        f_up, f_down = f(up), f(down)
        probes.append((min(f_up, f_down), int(d), up, f_up, down, f_down))
    probes.sort(key=lambda p: (p[0], p[1]))
    new_level = lev.copy()
    for _, d, up, f_up, down, f_down in probes:
        new_level[d] += 1
        for pt, val in ((up, f_up), (down, f_down)):
            centers.append(pt)
            levels.append(new_level.copy())
            fvals.append(val)
    levels[j] = new_level


def exhaustive_maximize(objective: Callable[[tuple], float], lower: Sequence[int],
                        upper: Sequence[int]) -> tuple:
    """Brute-force ``(argmax, max)`` over an integer box; reference oracle for tests."""
    best_point, best = None, -np.inf
    for point in np.ndindex(*(b - a + 1 for a, b in zip(lower, upper))):
        p = tuple(int(a + q) for a, q in zip(lower, point))
        v = objective(p)
        if v > best:
            best_point, best = p, v
    return best_point, best
