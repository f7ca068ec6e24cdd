"""Alignment scores maximised during delay estimation.

Both scores are sums of per-feature terms against the shared target:

* ``gcc``: absolute Pearson correlation at the aligned lag.
* ``tdmi``: Kraskov-Stoegbauer-Grassberger (estimator 1) mutual information.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from .dataset import AlignedDataset, DelayVector, TimeSeriesDataset, align, fitting_rows
from .errors import AlignmentError, ConfigError, DataError, DegenerateScoreWarning

GCC = "gcc"
TDMI = "tdmi"
SCORE_KINDS = (GCC, TDMI)

_JITTER = 1e-10


@dataclass(frozen=True)
class ScoreFunction:
    kind: str = GCC
    knn_k: int = 3
    seed: int = 0  # drives the tie-breaking jitter in TDMI

    def __post_init__(self):
        if self.kind not in SCORE_KINDS:
            raise ConfigError(f"unknown score kind {self.kind!r}; expected one of {SCORE_KINDS}")
        if int(self.knn_k) < 1:
            raise ConfigError("knn_k must be >= 1")

    def min_rows(self) -> int:
        return 3 if self.kind == GCC else self.knn_k + 1

    def term(self, column: np.ndarray, target: np.ndarray, index: int) -> float:
        if self.kind == GCC:
            return abs_correlation(column, target)
        return _tdmi_term(column, target, self.knn_k, self.seed, index)


def abs_correlation(a: np.ndarray, b: np.ndarray) -> float:
    """``|pearson(a, b)|``; zero with a warning when either side is constant."""
    a = a - a.mean()
    b = b - b.mean()
    saa, sbb = float(a @ a), float(b @ b)
    if saa <= 0.0 or sbb <= 0.0:
        warnings.warn("zero-variance series in correlation score; term set to 0",
                      DegenerateScoreWarning, stacklevel=3)
        return 0.0
    r = float(a @ b) / np.sqrt(saa * sbb)
    return min(abs(r), 1.0)


def gcc_score(aligned: AlignedDataset) -> float:
    if aligned.rows < 3:
        raise DataError(f"correlation score needs >= 3 rows, got {aligned.rows}")
    y = aligned.target
    return float(sum(abs_correlation(aligned.design[:, i], y) for i in range(aligned.design.shape[1])))


def _standardise(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    sd = x.std()
    scale = sd if sd > 0 else 1.0
    z = (x - x.mean()) / scale
    return z + rng.uniform(-1.0, 1.0, size=z.shape) * _JITTER


def knn_mutual_information(a, b, k: int = 3, rng=None) -> float:
    """KSG estimator 1 of I(a; b) in nats, clamped at zero.

    Both series are standardised and jittered by ~1e-10 (from ``rng``) so
    repeated sensor values do not create distance ties.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.shape[0]
    if b.shape[0] != n:
        raise DataError(f"series lengths differ: {n} vs {b.shape[0]}")
    if n <= k:
        raise DataError(f"k-NN mutual information needs more than k={k} samples, got {n}")
    if a.std() == 0 or b.std() == 0:
        warnings.warn("constant series in mutual information; returning 0",
                      DegenerateScoreWarning, stacklevel=2)
        return 0.0
    if rng is None:
        rng = np.random.default_rng(0)
    a = _standardise(a, rng)
    b = _standardise(b, rng)

    joint = np.column_stack([a, b])
    dist, _ = cKDTree(joint).query(joint, k=k + 1, p=np.inf)
    eps = dist[:, -1]
    n_a = _count_strictly_within(a, eps)
    n_b = _count_strictly_within(b, eps)
    mi = digamma(k) + digamma(n) - np.mean(digamma(n_a + 1) + digamma(n_b + 1))
    return max(float(mi), 0.0)


def _count_strictly_within(x: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """Per point, how many other points lie at distance < radius (1-D)."""
    xs = np.sort(x)
    lo = np.searchsorted(xs, x - radius, side="right")
    hi = np.searchsorted(xs, x + radius, side="left")
    return (hi - lo - 1).astype(float)


def _tdmi_term(column, target, k, seed, index) -> float:
    # per-column stream: results do not depend on evaluation order
    rng = np.random.default_rng([seed, index])
    return knn_mutual_information(column, target, k, rng=rng)


def tdmi_score(aligned: AlignedDataset, k: int = 3, seed: int = 0) -> float:
    y = aligned.target
    return float(sum(_tdmi_term(aligned.design[:, i], y, k, seed, i)
                     for i in range(aligned.design.shape[1])))


def score_aligned(aligned: AlignedDataset, score: ScoreFunction) -> float:
    if score.kind == GCC:
        return gcc_score(aligned)
    return tdmi_score(aligned, score.knn_k, score.seed)


def evaluate(dataset: TimeSeriesDataset, dv: DelayVector, score: ScoreFunction) -> float:
    """Score of ``dataset`` aligned by ``dv``; the quantity delay estimation maximises."""
    return score_aligned(align(dataset, dv), score)


class DelayObjective:
    """Weighted sum of scores over one or more datasets, memoised per feature term.

    Each term depends only on (dataset, feature, delay, window, row count), so
    repeated evaluations that share a coordinate reuse it.  Called with an
    integer point ``(d_1, ..., d_n, w)`` as produced by the optimizer.
    """

    def __init__(self, datasets: Sequence[TimeSeriesDataset], score: ScoreFunction,
                 weights: Sequence[float] | None = None):
        self.datasets = list(datasets)
        if not self.datasets:
            raise DataError("objective needs at least one dataset")
        self.score = score
        if weights is None:
            weights = [1.0] * len(self.datasets)
        self.weights = [float(w) for w in weights]
        self._terms: dict = {}

    def __call__(self, point) -> float:
        return self.evaluate(DelayVector.from_point(point))

    def evaluate(self, dv: DelayVector) -> float:
        total = 0.0
        min_rows = self.score.min_rows()
        for b, (ds, weight) in enumerate(zip(self.datasets, self.weights)):
            if len(dv.delays) != ds.n_features:
                raise DataError(f"delay vector has {len(dv.delays)} entries for {ds.n_features} features")
            rows = fitting_rows(ds, dv.delays, dv.window)
            if rows < min_rows:
                raise AlignmentError(f"delays {dv.delays} with window {dv.window} leave {rows} rows "
                                     f"in segment {b}; the score needs {min_rows}")
            smoothed = ds.smoothed(dv.window)
            y = ds.target[:rows]
            t = ds.start
            for i, d in enumerate(dv.delays):
                key = (b, i, d, dv.window, rows)
                term = self._terms.get(key)
                if term is None:
                    term = self.score.term(smoothed[i, t + d:t + d + rows], y, i)
                    self._terms[key] = term
                total += weight * term
        return total
