"""Metrics, interval coverage and bootstrap delay diagnostics."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DataError

REPORT_VERSION = 1
DEFAULT_BINS = 20


def auc(scores, labels) -> float:
    """Area under the ROC curve in Mann-Whitney form; tied scores count one half."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=float)
    if s.shape != y.shape:
        raise DataError(f"{s.shape[0]} scores for {y.shape[0]} labels")
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("labels must be 0 or 1")
    n_pos = int(y.sum())
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC needs both classes present")
    ranks = rankdata(s)  # average ranks give ties half credit
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def r_squared(pred, actual) -> float:
    p = np.asarray(pred, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape:
        raise DataError(f"{p.shape[0]} predictions for {a.shape[0]} actuals")
    if a.shape[0] < 2:
        raise DataError("R^2 needs at least 2 values")
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        raise DataError("R^2 undefined for constant actuals")
    return 1.0 - float(np.sum((a - p) ** 2)) / ss_tot


def coverage(lower, upper, actual) -> float:
    """Fraction of ``actual`` inside the closed intervals ``[lower, upper]``."""
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    a = np.asarray(actual, dtype=float)
    if not (lo.shape == hi.shape == a.shape):
        raise DataError(f"length mismatch: {lo.shape}, {hi.shape}, {a.shape}")
    if (lo > hi).any():
        raise DataError("interval with lower > upper")
    if a.shape[0] == 0:
        raise DataError("coverage of zero rows")
    return float(np.mean((lo <= a) & (a <= hi)))


def coverage_for_classification(distribution, point_estimates) -> float:
    """Share of baseline point predictions inside the ensemble's percentile interval."""
    if distribution.lower is None:
        raise DataError("prediction distribution carries no interval; pass alpha when predicting")
    return coverage(distribution.lower, distribution.upper, point_estimates)


def score_predictions(task_kind: str, pred, actual) -> float:
    if task_kind == "classification":
        return auc(pred, actual)
    return r_squared(pred, actual)


@dataclass
class DelayDistributionSummary:
    feature_names: tuple
    edges: np.ndarray  # (bins + 1,) over the normalised [0, 1] range
    histograms: np.ndarray  # (n, bins), each row sums to 1
    point_estimates: Optional[tuple] = None  # normalised, per feature
    truth: Optional[tuple] = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature", "bin_lower", "bin_upper", "mass", "point_estimate", "truth"])
        for i, name in enumerate(self.feature_names):
            pe = "" if self.point_estimates is None else repr(float(self.point_estimates[i]))
            tr = "" if self.truth is None else repr(float(self.truth[i]))
            for k in range(self.histograms.shape[1]):
                w.writerow([name, repr(float(self.edges[k])), repr(float(self.edges[k + 1])),
                            repr(float(self.histograms[i, k])), pe, tr])
        return buf.getvalue()


def normalise_delays(delays: np.ndarray, box) -> np.ndarray:
    lo = np.asarray(box.lower[:-1], dtype=float)
    span = np.asarray(box.upper[:-1], dtype=float) - lo
    return np.where(span > 0, (np.asarray(delays, dtype=float) - lo) / np.where(span > 0, span, 1.0), 0.0)


def delay_distribution(model, box, truth: Optional[Sequence[int]] = None,
                       point_estimates: Optional[Sequence[int]] = None, bins: int = DEFAULT_BINS,
                       feature_names: Optional[Sequence[str]] = None) -> DelayDistributionSummary:
    """Histogram of member delays per feature on the search range scaled to [0, 1]."""
    delays = np.array([mb.delay.delays for mb in model.members], dtype=float)
    if delays.size == 0:
        raise DataError("model has no members")
    norm = np.clip(normalise_delays(delays, box), 0.0, 1.0)
    edges = np.linspace(0.0, 1.0, bins + 1)
    hists = np.stack([np.histogram(norm[:, i], bins=edges)[0] for i in range(norm.shape[1])]).astype(float)
    hists /= delays.shape[0]
    names = tuple(feature_names) if feature_names else tuple(f"x{i}" for i in range(norm.shape[1]))
    pe = None if point_estimates is None else tuple(float(v) for v in normalise_delays(point_estimates, box))
    tr = None if truth is None else tuple(float(v) for v in normalise_delays(truth, box))
    return DelayDistributionSummary(names, edges, hists, pe, tr)


@dataclass
class EvaluationReport:
    method: str
    score_kind: str
    task_kind: str
    metric: str
    value: float
    n_test_rows: int
    members: list = field(default_factory=list)  # per member: index, delays, window, score, evaluations
    member_metrics: list = field(default_factory=list)
    coverage: dict = field(default_factory=dict)  # alpha (as str) -> coverage
    stats: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    format_version: int = REPORT_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def summary_table(self) -> str:
        """Plain-text one-row table in the layout of a method-by-dataset results table."""
        cov = "  ".join(f"cov@{a}={v:.3f}" for a, v in self.coverage.items())
        head = f"{'Method':<22}{self.metric.upper():>10}{'B':>6}{'rows':>8}"
        row = f"{self.method + '-' + self.score_kind.upper():<22}{self.value:>10.3f}{len(self.members):>6}{self.n_test_rows:>8}"
        return "\n".join([head, row] + ([cov] if cov else [])) + "\n"
