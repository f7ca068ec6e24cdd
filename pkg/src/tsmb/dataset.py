"""Time-series data model, CSV ingestion, chronological splits and delay alignment.

Conventions
-----------
A dataset holds ``n`` feature series of common length ``M`` and a target of
length ``m`` whose first value sits at absolute index ``t`` of the feature
timeline.  A delay ``d`` for feature ``i`` means ``x_i[t + d + j]`` is the
feature value that belongs with ``y[j]``.

Moving averages use the window-start convention: smoothed index ``j`` is the
mean of ``x[j : j + w]``, so smoothing trims ``w - 1`` points from the end and
never moves the meaning of a delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .errors import AlignmentError, DataError

REGRESSION = "regression"
CLASSIFICATION = "classification"
TASK_KINDS = (REGRESSION, CLASSIFICATION)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimeSeriesDataset:
    features: np.ndarray  # (n, M)
    target: np.ndarray  # (m,)
    start: int = 0
    tick_seconds: float = 1.0
    feature_names: tuple = ()
    task_kind: str = REGRESSION
    target_name: str = "y"
    metadata: dict = field(default_factory=dict)
    # smoothed feature matrices keyed by window, shared by every view of the same X
    _smoothed: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        feats = self.features
        if not (isinstance(feats, np.ndarray) and feats.dtype == float and not feats.flags.writeable):
            feats = _frozen(feats)
        if feats.ndim == 1:
            feats = feats.reshape(1, -1)
        if feats.ndim != 2:
            raise DataError("features must be a 2-D array (n_series, length)")
        target = self.target
        if not (isinstance(target, np.ndarray) and target.dtype == float and not target.flags.writeable):
            target = _frozen(target)
        if target.ndim != 1:
            raise DataError("target must be 1-D")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "target", target)

        n, M = feats.shape
        m, t = target.shape[0], int(self.start)
        object.__setattr__(self, "start", t)
        if m < 1:
            raise DataError("target must hold at least one value")
        if t < 0 or t + m > M:
            raise DataError(f"target window [{t}, {t + m}) does not fit in feature length {M}")
        if not self.tick_seconds > 0:
            raise DataError("tick_seconds must be positive")
        if self.task_kind not in TASK_KINDS:
            raise DataError(f"unknown task kind {self.task_kind!r}")
        if self.task_kind == CLASSIFICATION and not np.isin(target, (0.0, 1.0)).all():
            raise DataError("classification targets must be 0 or 1")
        if not np.isfinite(feats).all() or not np.isfinite(target).all():
            raise DataError("missing or non-finite values are not supported")
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(n))
        if len(names) != n:
            raise DataError(f"{len(names)} feature names for {n} series")
        object.__setattr__(self, "feature_names", names)

    @property
    def n_features(self) -> int:
        return self.features.shape[0]

    @property
    def length(self) -> int:
        """Feature length ``M``."""
        return self.features.shape[1]

    @property
    def m(self) -> int:
        return self.target.shape[0]

    def smoothed(self, window: int) -> np.ndarray:
        """Feature matrix smoothed with ``window``; cached and shared across views."""
        out = self._smoothed.get(window)
        if out is None:
            if window == 1:
                out = self.features
            else:
                out = np.stack([moving_average(x, window) for x in self.features]) if self.n_features else \
                    np.empty((0, self.length - window + 1))
                out.setflags(write=False)
            self._smoothed[window] = out
        return out

    def view(self, start: int, m: int, target: Optional[np.ndarray] = None) -> "TimeSeriesDataset":
        """Same features, different target window (``start`` is absolute)."""
        if target is None:
            offset = start - self.start
            if offset < 0 or offset + m > self.m:
                raise DataError("view window falls outside the target")
            target = self.target[offset:offset + m]
        return TimeSeriesDataset(
            features=self.features, target=target, start=start, tick_seconds=self.tick_seconds,
            feature_names=self.feature_names, task_kind=self.task_kind, target_name=self.target_name,
            metadata=self.metadata, _smoothed=self._smoothed,
        )


@dataclass(frozen=True)
class DelayVector:
    delays: tuple
    window: int = 1

    def __post_init__(self):
        delays = tuple(int(d) for d in self.delays)
        if any(d < 0 for d in delays):
            raise DataError(f"delays must be non-negative, got {delays}")
        if int(self.window) < 1:
            raise DataError("window must be >= 1")
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "window", int(self.window))

    @classmethod
    def zeros(cls, n: int) -> "DelayVector":
        return cls((0,) * n, 1)

    def as_point(self) -> tuple:
        return self.delays + (self.window,)

    @classmethod
    def from_point(cls, point: Sequence[int]) -> "DelayVector":
        return cls(tuple(point[:-1]), point[-1])


@dataclass(frozen=True, eq=False)
class AlignedDataset:
    design: np.ndarray  # (m', n)
    target: np.ndarray  # (m',)
    delay: DelayVector

    @property
    def rows(self) -> int:
        return self.target.shape[0]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.5
    validation_fraction: float = 0.25
    test_fraction: float = 0.25

    def __post_init__(self):
        fr = (self.train_fraction, self.validation_fraction, self.test_fraction)
        if any(not 0.0 <= f <= 1.0 for f in fr):
            raise DataError(f"split fractions must lie in [0, 1], got {fr}")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise DataError(f"split fractions must sum to 1, got {sum(fr)}")


def moving_average(series, window: int) -> np.ndarray:
    """Trailing-trim moving average: ``out[j] = mean(series[j:j + window])``.

    >>> moving_average([1, 2, 3, 4], 2)
    array([1.5, 2.5, 3.5])
    """
    x = np.asarray(series, dtype=float)
    window = int(window)
    if window < 1:
        raise DataError("window must be >= 1")
    if window > x.shape[0]:
        raise DataError(f"window {window} exceeds series length {x.shape[0]}")
    if window == 1:
        return x.copy()
    out = np.lib.stride_tricks.sliding_window_view(x, window).mean(axis=1)
    # summation rounding can step one ulp outside the data range
    return np.clip(out, x.min(), x.max())


def fitting_rows(dataset: TimeSeriesDataset, delays: Sequence[int], window: int) -> int:
    """Rows available after shifting by ``delays`` on the ``window``-smoothed series."""
    smoothed_len = dataset.length - (window - 1)
    if not len(delays):
        return dataset.m
    return min(dataset.m, smoothed_len - dataset.start - max(delays))


def align(dataset: TimeSeriesDataset, dv: DelayVector) -> AlignedDataset:
    """Build the delay-corrected design matrix ``X(delta)`` paired with the target.

    Column ``i``, row ``j`` is the smoothed value of series ``i`` at absolute
    index ``t + delays[i] + j``.  When a shifted window runs off the end of the
    smoothed series every column is cut to the longest common length and paired
    with the leading target values.
    """
    n = dataset.n_features
    if len(dv.delays) != n:
        raise DataError(f"delay vector has {len(dv.delays)} entries for {n} features")
    w = dv.window
    if w > dataset.length:
        raise AlignmentError(f"window {w} exceeds series length {dataset.length}")
    rows = fitting_rows(dataset, dv.delays, w)
    if rows < 1:
        worst = int(np.argmax(dv.delays))
        raise AlignmentError(
            f"delay {dv.delays[worst]} (window {w}) pushes series "
            f"{dataset.feature_names[worst]!r} past its end",
            series=dataset.feature_names[worst],
        )
    smoothed = dataset.smoothed(w)
    t = dataset.start
    design = np.empty((rows, n))
    for i, d in enumerate(dv.delays):
        design[:, i] = smoothed[i, t + d:t + d + rows]
    return AlignedDataset(design=design, target=dataset.target[:rows], delay=dv)


def split(dataset: TimeSeriesDataset, spec: SplitSpec):
    """Chronological (train, validation, test) partitions sharing the feature matrix.

    A partition with zero fraction comes back as ``None``.
    """
    m = dataset.m
    n_train = int(math.floor(spec.train_fraction * m + 0.5))
    n_val = int(math.floor(spec.validation_fraction * m + 0.5))
    n_test = m - n_train - n_val
    sizes = (n_train, n_val, n_test)
    fractions = (spec.train_fraction, spec.validation_fraction, spec.test_fraction)
    parts = []
    offset = dataset.start
    for name, size, frac in zip(("train", "validation", "test"), sizes, fractions):
        if frac == 0.0:
            if size > 0:
                raise DataError(f"{name} fraction is 0 but {size} rows were left over")
            parts.append(None)
            continue
        if size < 1:
            raise DataError(f"{name} partition is empty for {m} rows at fraction {frac}")
        parts.append(dataset.view(offset, size))
        offset += size
    return tuple(parts)


def load_csv(path, target_column: str, task_kind: str = REGRESSION,
             tick_seconds: Optional[float] = None) -> TimeSeriesDataset:
    """Read a one-row-per-tick CSV.  A leading ``timestamp`` column is only checked for order."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc
    if target_column not in frame.columns:
        raise DataError(f"target column {target_column!r} not in {list(frame.columns)}")
    if len(frame) < 2:
        raise DataError(f"{path} has {len(frame)} rows; need at least 2")

    timestamps = None
    if len(frame.columns) and frame.columns[0] == "timestamp" and target_column != "timestamp":
        timestamps = frame.pop("timestamp")

    numeric = {}
    for col in frame.columns:
        cells = frame[col].str.strip().to_numpy()
        # exact decimal parsing; pandas' fast converter can be off by an ulp
        values = np.array([_parse_float(c) for c in cells])
        bad = ~np.isfinite(values)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise DataError(f"non-numeric or missing cell {frame[col].iloc[row]!r} "
                            f"in column {col!r}, data row {row + 1}")
        numeric[col] = values

    if timestamps is not None:
        tick = _check_timestamps(timestamps)
        if tick_seconds is None:
            tick_seconds = tick
    target = numeric.pop(target_column)
    names = tuple(numeric)
    feats = np.stack([numeric[c] for c in names]) if names else np.empty((0, target.shape[0]))
    if task_kind == CLASSIFICATION and not np.isin(target, (0.0, 1.0)).all():
        bad = target[~np.isin(target, (0.0, 1.0))][0]
        raise DataError(f"classification target holds {bad!r}; expected 0 or 1")
    return TimeSeriesDataset(features=feats, target=target, start=0,
                             tick_seconds=tick_seconds or 1.0, feature_names=names,
                             task_kind=task_kind, target_name=target_column)


def _parse_float(cell: str) -> float:
    try:
        return float(cell)
    except ValueError:
        return np.nan


def _check_timestamps(raw: pd.Series) -> float:
    as_num = pd.to_numeric(raw, errors="coerce")
    if as_num.notna().all():
        values = as_num.to_numpy(dtype=float)
        scale = 1.0
    else:
        try:
            parsed = pd.to_datetime(raw)
        except (ValueError, TypeError) as exc:
            raise DataError(f"unparseable timestamp column: {exc}") from exc
        values = parsed.astype("int64").to_numpy(dtype=float)
        scale = 1e-9
    steps = np.diff(values)
    if (steps <= 0).any():
        raise DataError("timestamp column must be strictly increasing")
    return float(np.median(steps) * scale)


def write_csv(dataset: TimeSeriesDataset, path) -> None:
    """Write the feature rows that overlap the target window (the loadable form)."""
    t, m = dataset.start, dataset.m
    cols = {name: dataset.features[i, t:t + m] for i, name in enumerate(dataset.feature_names)}
    cols[dataset.target_name] = dataset.target
    pd.DataFrame(cols).to_csv(path, index=False, float_format="%.17g")
