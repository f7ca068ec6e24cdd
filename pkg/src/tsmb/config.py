"""Run configuration: one JSON file, overridable field by field from the command line.

Precedence is flag > config file > default.  Every resolved config is written
next to the run's outputs so a report never depends on hidden state.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Optional

from .bootstrap import BlockBootstrapSpec
from .dataset import REGRESSION, TASK_KINDS, SplitSpec
from .ensemble import DEFAULT_SIGMA, TsmbConfig
from .errors import ConfigError, TsmbError
from .injection import FixedDelaySpec, StochasticDelaySpec
from .learners import LearnerSpec
from .optimizer import DEFAULT_BUDGET, SearchBox
from .scores import ScoreFunction

METHODS = ("tsmb", "tdb", "perturbed", "tde-point", "no-alignment", "real-delay")


@dataclass
class DataSection:
    path: str = ""
    target_column: str = "y"
    task_kind: str = REGRESSION
    tick_seconds: Optional[float] = None


@dataclass
class SplitSection:
    train: float = 0.5
    validation: float = 0.25
    test: float = 0.25


@dataclass
class InjectionSection:
    kind: str = "fixed"
    delays: Optional[list] = None
    candidates: Optional[list] = None
    seed: int = 0


@dataclass
class ScoreSection:
    kind: str = "gcc"
    knn_k: int = 3


@dataclass
class LearnerSection:
    kind: str = "gbdt"
    n_trees: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_samples_leaf: int = 5
    l2: float = 1e-3


@dataclass
class BoxSection:
    delay_lower: object = 0  # int or one int per feature
    delay_upper: object = 30
    window_lower: int = 1
    window_upper: int = 1
    budget: int = DEFAULT_BUDGET
    max_iterations: int = 10_000


@dataclass
class RunConfig:
    data: DataSection = field(default_factory=DataSection)
    split: SplitSection = field(default_factory=SplitSection)
    injection: Optional[InjectionSection] = None
    truth: Optional[str] = None  # ground-truth sidecar written by `tsmb inject`
    method: str = "tsmb"
    score: ScoreSection = field(default_factory=ScoreSection)
    learner: LearnerSection = field(default_factory=LearnerSection)
    B: int = 100
    block_fraction: float = 0.25
    box: BoxSection = field(default_factory=BoxSection)
    sigma: float = DEFAULT_SIGMA
    alpha: list = field(default_factory=lambda: [0.05, 0.2, 0.5])
    seed: int = 0
    workers: int = 1
    out: str = "runs/out"

    # ---------------------------------------------------------------- validation
    def validate(self) -> "RunConfig":
        _check(self.method in METHODS, "method", f"must be one of {METHODS}, got {self.method!r}")
        _check(self.data.task_kind in TASK_KINDS, "data.task_kind", f"must be one of {TASK_KINDS}")
        _check(isinstance(self.B, int) and self.B >= 1, "B", "must be a positive integer")
        _check(isinstance(self.seed, int), "seed", "must be an integer")
        _check(isinstance(self.workers, int) and self.workers >= 1, "workers", "must be >= 1")
        _check(isinstance(self.alpha, list) and self.alpha and all(
            isinstance(a, (int, float)) and 0 < a < 1 for a in self.alpha), "alpha", "must be a list of values in (0, 1)")
        _check(self.sigma >= 0, "sigma", "must be >= 0")
        if self.injection is not None:
            inj = self.injection
            _check(inj.kind in ("fixed", "stochastic"), "injection.kind", "must be 'fixed' or 'stochastic'")
            if inj.kind == "fixed":
                _check(isinstance(inj.delays, list) and inj.delays, "injection.delays", "fixed injection needs a delay list")
            else:
                _check(isinstance(inj.candidates, list) and inj.candidates and all(
                    isinstance(c, list) for c in inj.candidates), "injection.candidates",
                       "stochastic injection needs a list of delay vectors")
        # build every typed spec once so their own checks fire now, before any work
        for name, build in (("split", self.split_spec), ("score", self.score_function),
                            ("learner", self.learner_spec), ("box", lambda: self.search_box(None)),
                            ("block_fraction", self.bootstrap_spec), ("injection", self.injection_spec)):
            try:
                build()
            except TsmbError as exc:
                raise ConfigError(f"config field {name!r}: {exc}") from exc
        return self

    # ---------------------------------------------------------------- typed views
    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.split.train, self.split.validation, self.split.test)

    def score_function(self) -> ScoreFunction:
        return ScoreFunction(self.score.kind, self.score.knn_k, seed=self.seed)

    def learner_spec(self) -> LearnerSpec:
        lr = self.learner
        return LearnerSpec(kind=lr.kind, task=self.data.task_kind, n_trees=lr.n_trees, max_depth=lr.max_depth,
                           learning_rate=lr.learning_rate, min_samples_leaf=lr.min_samples_leaf, l2=lr.l2,
                           seed=self.seed)

    def bootstrap_spec(self) -> BlockBootstrapSpec:
        return BlockBootstrapSpec(self.block_fraction, seed=self.seed)

    def search_box(self, n_features: Optional[int]) -> SearchBox:
        b = self.box
        lo, hi = b.delay_lower, b.delay_upper
        if n_features is None:
            n_features = len(lo) if isinstance(lo, list) else len(hi) if isinstance(hi, list) else 1
        lo = lo if isinstance(lo, list) else [lo] * n_features
        hi = hi if isinstance(hi, list) else [hi] * n_features
        if len(lo) != n_features or len(hi) != n_features:
            raise ConfigError(f"config field 'box': delay bounds list {len(lo)}/{len(hi)} values "
                              f"for {n_features} features")
        return SearchBox.for_delays(lo, hi, (b.window_lower, b.window_upper), budget=b.budget,
                                    max_iterations=b.max_iterations)

    def injection_spec(self):
        inj = self.injection
        if inj is None:
            return None
        if inj.kind == "fixed":
            return FixedDelaySpec(tuple(inj.delays))
        return StochasticDelaySpec(tuple(tuple(c) for c in inj.candidates), seed=inj.seed)

    def tsmb_config(self, n_features: int, B: Optional[int] = None) -> TsmbConfig:
        return TsmbConfig(box=self.search_box(n_features), B=B or self.B, score=self.score_function(),
                          learner=self.learner_spec(), bootstrap=self.bootstrap_spec(), seed=self.seed)

    def to_dict(self) -> dict:
        return asdict(self)


def _check(ok, name, message):
    if not ok:
        raise ConfigError(f"config field {name!r}: {message}")


def _build(cls, data, prefix):
    if not isinstance(data, dict):
        raise ConfigError(f"config field {prefix.rstrip('.') or 'root'!r}: expected an object")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"config field {prefix + key!r}: unknown key")
        default = known[key].default_factory() if callable(known[key].default_factory) else known[key].default
        section = _SECTIONS.get((cls, key))
        if section is not None and value is not None:
            value = _build(section, value, prefix + key + ".")
        elif is_dataclass(default):
            value = _build(type(default), value, prefix + key + ".")
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"config section {prefix.rstrip('.') or 'root'!r}: {exc}") from exc


_SECTIONS = {(RunConfig, "injection"): InjectionSection}


def config_from_dict(data: dict) -> RunConfig:
    return _build(RunConfig, data, "")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    cfg = config_from_dict(data)
    # relative paths in the file are relative to the file; --out on the command line is not
    base = path.parent
    if "out" in data and not Path(cfg.out).is_absolute():
        cfg.out = str(base / cfg.out)
    if cfg.data.path and not Path(cfg.data.path).is_absolute():
        cfg.data.path = str(base / cfg.data.path)
    if cfg.truth and not Path(cfg.truth).is_absolute():
        cfg.truth = str(base / cfg.truth)
    return cfg


def apply_overrides(cfg: RunConfig, method=None, score=None, learner=None, B=None, seed=None,
                    workers=None, out=None, alpha=None) -> RunConfig:
    if method is not None:
        cfg.method = method
    if score is not None:
        cfg.score.kind = score
    if learner is not None:
        cfg.learner.kind = learner
    if B is not None:
        cfg.B = B
    if seed is not None:
        cfg.seed = seed
    if workers is not None:
        cfg.workers = workers
    if out is not None:
        cfg.out = out
    if alpha is not None:
        cfg.alpha = list(alpha)
    return cfg


def resolved_dict(cfg: RunConfig) -> dict:
    """Effective config minus ``workers`` and ``out``, which never change results."""
    d = cfg.to_dict()
    d.pop("workers")
    d.pop("out")
    return d
