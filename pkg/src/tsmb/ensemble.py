"""Time Series Model Bootstrap and its variants.

* :func:`tsmb_train` - one delay estimate per block-bootstrap resample, one
  model per estimate, predictions averaged over members.
* :func:`tdb_train` - same delay estimates, one model at their rounded mean.
* :func:`perturbed_train` - one point estimate, members at clipped Gaussian
  perturbations of it on the normalised delay scale.
* :func:`tde_point_train` - the classic single-estimate pipeline.

Member ``b`` draws all of its randomness from ``(seed, b)``, so a model with
``B`` members is a prefix of any model trained with a larger ``B``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .bootstrap import BlockBootstrapSpec, block_bootstrap_sample
from .dataset import DelayVector, TimeSeriesDataset, align, fitting_rows
from .errors import AlignmentError, ConfigError, DataError, TsmbError
from .learners import FittedLearner, LearnerSpec, fit, predict, with_seed
from .optimizer import OptimizationResult, SearchBox, direct_maximize
from .scores import DelayObjective, ScoreFunction

DEFAULT_SIGMA = math.sqrt(0.1)


@dataclass(frozen=True)
class TsmbConfig:
    box: SearchBox
    B: int = 100
    score: ScoreFunction = field(default_factory=ScoreFunction)
    learner: LearnerSpec = field(default_factory=LearnerSpec)
    bootstrap: BlockBootstrapSpec = field(default_factory=BlockBootstrapSpec)
    seed: int = 0

    def __post_init__(self):
        if int(self.B) < 1:
            raise ConfigError("B must be >= 1")


@dataclass(frozen=True, eq=False)
class Member:
    delay: DelayVector
    learner: FittedLearner
    score: Optional[float] = None  # objective value at the delay estimate
    evaluations: int = 0


@dataclass(frozen=True, eq=False)
class TsmbModel:
    members: tuple

    @property
    def B(self) -> int:
        return len(self.members)

    @property
    def delays(self) -> list:
        """The empirical delay distribution, one DelayVector per member."""
        return [mb.delay for mb in self.members]

    def prefix(self, B: int) -> "TsmbModel":
        if not 1 <= B <= self.B:
            raise ConfigError(f"cannot take {B} members from a {self.B}-member model")
        return TsmbModel(self.members[:B])


@dataclass(frozen=True, eq=False)
class PointModel:
    """Single model at a single delay (classic TDE, TDB and the fixed-delay baselines)."""

    delay: DelayVector
    learner: FittedLearner
    score: Optional[float] = None
    bootstrap_delays: tuple = ()

    def as_ensemble(self) -> TsmbModel:
        return TsmbModel((Member(self.delay, self.learner, self.score),))


@dataclass(frozen=True, eq=False)
class PredictionDistribution:
    members: np.ndarray  # (B, rows), member order as trained
    mean: np.ndarray
    alpha: Optional[float] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    @property
    def B(self) -> int:
        return self.members.shape[0]

    def interval(self, alpha: float):
        return percentile_interval(np.sort(self.members, axis=0), alpha)


def nearest_rank(sorted_values: np.ndarray, q: float) -> np.ndarray:
    """Nearest-rank empirical quantile along axis 0: element ``ceil(q * B)`` (1-based)."""
    B = sorted_values.shape[0]
    rank = min(max(int(math.ceil(q * B - 1e-9)), 1), B)
    return sorted_values[rank - 1]


def percentile_interval(sorted_values: np.ndarray, alpha: float):
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    return nearest_rank(sorted_values, alpha / 2), nearest_rank(sorted_values, 1 - alpha / 2)


# ---------------------------------------------------------------- delay estimation

def estimate_delay(datasets: Sequence[TimeSeriesDataset], cfg: TsmbConfig,
                   weights: Optional[Sequence[float]] = None) -> OptimizationResult:
    if cfg.box.n_delays != datasets[0].n_features:
        raise ConfigError(f"search box has {cfg.box.n_delays} delay dimensions for "
                          f"{datasets[0].n_features} features")
    objective = DelayObjective(datasets, cfg.score, weights)
    return direct_maximize(objective, cfg.box, seed=cfg.seed)


def fit_at(train: TimeSeriesDataset, dv: DelayVector, spec: LearnerSpec) -> FittedLearner:
    aligned = align(train, dv)
    return fit(spec, aligned.design, aligned.target)


def _member_spec(cfg: TsmbConfig, b: int) -> LearnerSpec:
    return with_seed(cfg.learner, int(np.random.SeedSequence([cfg.seed, b]).generate_state(1)[0]))


def _bootstrap_delay(train, cfg, b) -> OptimizationResult:
    sample = block_bootstrap_sample(train, replace(cfg.bootstrap, seed=cfg.seed), b)
    # a trailing remnant shorter than the score's minimum carries no usable pairs
    keep = [(blk, w) for blk, w in zip(sample.blocks, sample.weights) if blk.m >= cfg.score.min_rows()]
    if not keep:
        raise DataError(f"bootstrap blocks of {max(sample.lengths)} rows are shorter than the "
                        f"{cfg.score.min_rows()} rows the {cfg.score.kind} score needs")
    blocks, weights = zip(*keep)
    return estimate_delay(blocks, cfg, weights)


def _tsmb_member(args) -> Member:
    train, cfg, b = args
    try:
        result = _bootstrap_delay(train, cfg, b)
        learner = fit_at(train, result.best_delay, _member_spec(cfg, b))
    except TsmbError as exc:
        exc.args = (f"member {b}: {exc}",) + exc.args[1:]
        if hasattr(exc, "member"):
            exc.member = b
        raise
    return Member(result.best_delay, learner, result.best_score, result.evaluations)


def _bootstrap_delay_only(args) -> OptimizationResult:
    train, cfg, b = args
    try:
        return _bootstrap_delay(train, cfg, b)
    except TsmbError as exc:
        exc.args = (f"member {b}: {exc}",) + exc.args[1:]
        raise


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    # results come back in submission order regardless of completion order
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def tsmb_train(train: TimeSeriesDataset, cfg: TsmbConfig, workers: int = 1,
               members: Optional[Sequence[int]] = None) -> TsmbModel:
    """Fit ``cfg.B`` (delay, model) pairs.

    Delays are estimated on block-bootstrap resamples; every model is fitted on
    the full training window aligned at its member's delay.  ``members`` picks
    explicit member indices (default ``range(cfg.B)``).
    """
    indices = range(cfg.B) if members is None else members
    return TsmbModel(tuple(_map(_tsmb_member, [(train, cfg, b) for b in indices], workers)))


def _member_rows(model: TsmbModel, test: TimeSeriesDataset) -> int:
    rows = test.m
    for b, mb in enumerate(model.members):
        r = fitting_rows(test, mb.delay.delays, mb.delay.window)
        if r < 1:
            raise AlignmentError(f"member {b}: delays {mb.delay.delays} with window "
                                 f"{mb.delay.window} do not fit the test series", member=b)
        rows = min(rows, r)
    return rows


def member_predictions(model: TsmbModel, test: TimeSeriesDataset, n_rows: Optional[int] = None) -> np.ndarray:
    """(B, rows) matrix; rows are cut to what every member's alignment can reach."""
    rows = _member_rows(model, test)
    if n_rows is not None:
        if n_rows > rows:
            raise AlignmentError(f"requested {n_rows} rows but members only reach {rows}")
        rows = n_rows
    out = np.empty((model.B, rows))
    for b, mb in enumerate(model.members):
        out[b] = predict(mb.learner, align(test, mb.delay).design[:rows])
    return out


def summarise(members: np.ndarray, alpha: Optional[float] = None) -> PredictionDistribution:
    """Mean and optional percentile interval, independent of member order."""
    ordered = np.sort(members, axis=0)
    mean = ordered.sum(axis=0) / ordered.shape[0]
    lower = upper = None
    if alpha is not None:
        lower, upper = percentile_interval(ordered, alpha)
    return PredictionDistribution(members=members, mean=mean, alpha=alpha, lower=lower, upper=upper)


def tsmb_predict(model: TsmbModel, test: TimeSeriesDataset, alpha: Optional[float] = None,
                 n_rows: Optional[int] = None) -> PredictionDistribution:
    return summarise(member_predictions(model, test, n_rows), alpha)


# ---------------------------------------------------------------- variants

def round_half_away(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def mean_delay(delays: Sequence[DelayVector]) -> DelayVector:
    """Componentwise mean of delays and windows, rounded half away from zero."""
    pts = np.array([dv.as_point() for dv in delays], dtype=float)
    return DelayVector.from_point([int(v) for v in round_half_away(pts.mean(axis=0))])


def tdb_train(train: TimeSeriesDataset, cfg: TsmbConfig, workers: int = 1) -> PointModel:
    results = _map(_bootstrap_delay_only, [(train, cfg, b) for b in range(cfg.B)], workers)
    boot = tuple(r.best_delay for r in results)
    dv = mean_delay(boot)
    return PointModel(dv, fit_at(train, dv, _member_spec(cfg, 0)), bootstrap_delays=boot)


def tde_point_train(train: TimeSeriesDataset, cfg: TsmbConfig) -> PointModel:
    result = estimate_delay([train], cfg)
    return PointModel(result.best_delay, fit_at(train, result.best_delay, _member_spec(cfg, 0)),
                      score=result.best_score)


def perturb_delays(center: DelayVector, box: SearchBox, sigma: float, seed: int, B: int) -> list:
    """Clipped Gaussian draws around ``center`` on each delay's [0, 1]-normalised search range.

    The window stays at the centre's value.  Member ``b`` uses stream ``(seed, b)``.
    """
    if sigma < 0:
        raise ConfigError("sigma must be >= 0")
    lo = np.asarray(box.lower[:-1], dtype=float)
    span = np.asarray(box.upper[:-1], dtype=float) - lo
    safe = np.where(span > 0, span, 1.0)
    mu = np.clip((np.asarray(center.delays, dtype=float) - lo) / safe, 0.0, 1.0)
    out = []
    for b in range(B):
        rng = np.random.default_rng([seed, b])
        z = np.clip(mu + sigma * rng.standard_normal(mu.shape[0]), 0.0, 1.0)
        ticks = np.where(span > 0, lo + np.floor(z * span + 0.5), center.delays)
        out.append(DelayVector(tuple(int(v) for v in ticks), center.window))
    return out


def perturbed_train(train: TimeSeriesDataset, cfg: TsmbConfig, sigma: float = DEFAULT_SIGMA) -> TsmbModel:
    point = tde_point_train(train, cfg)
    delays = perturb_delays(point.delay, cfg.box, sigma, cfg.seed, cfg.B)
    members = []
    cache: dict = {}
    for b, dv in enumerate(delays):
        spec = _member_spec(cfg, b)
        key = (dv, spec)
        if key not in cache:
            cache[key] = fit_at(train, dv, spec)
        members.append(Member(dv, cache[key]))
    return TsmbModel(tuple(members))
