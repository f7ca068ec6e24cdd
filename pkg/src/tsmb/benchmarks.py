"""Synthetic benchmarks with known delays, shared by the acceptance suite and scripts/."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .bootstrap import BlockBootstrapSpec
from .dataset import DelayVector, SplitSpec, TimeSeriesDataset, fitting_rows, split
from .ensemble import (PointModel, TsmbConfig, TsmbModel, fit_at, perturbed_train, tdb_train, tde_point_train,
                       tsmb_predict, tsmb_train, _member_spec)
from .evaluation import score_predictions
from .injection import StochasticDelaySpec, inject_stochastic, synth_dataset
from .learners import LearnerSpec
from .optimizer import SearchBox
from .scores import ScoreFunction


@dataclass(frozen=True)
class StochasticBenchmark:
    """Three latent drivers, each reaching the target through one of five delay vectors per row."""

    length: int = 3000
    base_delays: tuple = (20, 14, 8)
    spread: int = 4
    n_candidates: int = 5
    noise_sd: float = 0.5
    smoothness: float = 2.0
    window: tuple = (1, 12)
    budget: int = 500
    split: SplitSpec = field(default_factory=SplitSpec)

    def candidates(self) -> tuple:
        offsets = np.linspace(-self.spread, self.spread, self.n_candidates).round().astype(int)
        return tuple(tuple(int(d + o) for d in self.base_delays) for o in offsets)

    def dataset(self, seed: int) -> TimeSeriesDataset:
        clean = synth_dataset(len(self.base_delays), self.length, (0,) * len(self.base_delays),
                              noise_sd=self.noise_sd, seed=seed, smoothness=self.smoothness)
        return inject_stochastic(clean, StochasticDelaySpec(self.candidates(), seed=seed))

    def box(self) -> SearchBox:
        hi = max(self.base_delays) + self.spread + 10
        return SearchBox.for_delays(0, hi, self.window, n_features=len(self.base_delays), budget=self.budget)


@dataclass(frozen=True)
class FixedBenchmark:
    """Noiseless target driven by rough latents at one fixed delay vector."""

    length: int = 2000
    delays: tuple = (7, 19, 28)
    smoothness: float = 1.0
    window: tuple = (1, 1)
    budget: int = 2000
    split: SplitSpec = field(default_factory=SplitSpec)

    def dataset(self, seed: int) -> TimeSeriesDataset:
        return synth_dataset(len(self.delays), self.length, self.delays, noise_sd=0.0, seed=seed,
                             smoothness=self.smoothness)

    def box(self) -> SearchBox:
        return SearchBox.for_delays(0, 30, self.window, n_features=len(self.delays), budget=self.budget)


def config_for(box: SearchBox, seed: int, B: int = 20, learner: str = "linear", score: str = "gcc",
               block_fraction: float = 0.25) -> TsmbConfig:
    return TsmbConfig(box=box, B=B, score=ScoreFunction(score, seed=seed), learner=LearnerSpec(kind=learner),
                      bootstrap=BlockBootstrapSpec(block_fraction), seed=seed)


def common_rows(test: TimeSeriesDataset, box: SearchBox) -> int:
    return fitting_rows(test, box.upper[:-1], box.upper[-1])


def zero_delay_model(train: TimeSeriesDataset, cfg: TsmbConfig) -> TsmbModel:
    dv = DelayVector.zeros(train.n_features)
    return PointModel(dv, fit_at(train, dv, _member_spec(cfg, 0))).as_ensemble()


METHODS = ("tsmb", "tdb", "perturbed", "tde-point", "no-alignment")


def train_methods(train: TimeSeriesDataset, cfg: TsmbConfig, methods: Sequence[str] = METHODS,
                  sigma: Optional[float] = None) -> dict:
    out = {}
    for name in methods:
        if name == "tsmb":
            out[name] = tsmb_train(train, cfg)
        elif name == "tdb":
            out[name] = tdb_train(train, cfg).as_ensemble()
        elif name == "perturbed":
            out[name] = perturbed_train(train, cfg) if sigma is None else perturbed_train(train, cfg, sigma=sigma)
        elif name == "tde-point":
            out[name] = tde_point_train(train, cfg).as_ensemble()
        elif name == "no-alignment":
            out[name] = zero_delay_model(train, cfg)
        else:
            raise ValueError(f"unknown method {name!r}")
    return out


def evaluate_methods(models: dict, test: TimeSeriesDataset, box: SearchBox) -> dict:
    """Test metric per method on the same leading rows of the test window."""
    rows = common_rows(test, box)
    y = test.target[:rows]
    return {name: score_predictions(test.task_kind, tsmb_predict(m, test, n_rows=rows).mean, y)
            for name, m in models.items()}


def run_stochastic(seed: int, bench: StochasticBenchmark = StochasticBenchmark(), B: int = 20,
                   methods: Sequence[str] = ("tsmb", "tde-point", "no-alignment"), learner: str = "linear") -> dict:
    ds = bench.dataset(seed)
    train, _, test = split(ds, bench.split)
    box = bench.box()
    models = train_methods(train, config_for(box, seed, B=B, learner=learner), methods)
    return evaluate_methods(models, test, box)


def with_budget(bench, budget: int):
    return replace(bench, budget=budget)
