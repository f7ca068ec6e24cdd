"""Inject known time delays into clean data, and generate synthetic misaligned series.

Injection moves each feature later in time: the value a clean feature held at
row ``k`` appears at row ``k + delay`` of the injected series, so aligning the
injected data with the same delay restores the clean pairing.  Rows at the
start with no source value are dropped from features and target alike; the
target values that remain are untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .dataset import CLASSIFICATION, REGRESSION, TimeSeriesDataset
from .errors import DataError


@dataclass(frozen=True)
class FixedDelaySpec:
    delays: tuple

    def __post_init__(self):
        object.__setattr__(self, "delays", tuple(int(d) for d in self.delays))
        if any(d < 0 for d in self.delays):
            raise DataError("injected delays must be non-negative")


@dataclass(frozen=True)
class StochasticDelaySpec:
    candidates: tuple  # K delay vectors
    seed: int = 0

    def __post_init__(self):
        cands = tuple(tuple(int(d) for d in c) for c in self.candidates)
        if not cands:
            raise DataError("stochastic injection needs at least one candidate vector")
        if len({len(c) for c in cands}) != 1:
            raise DataError("candidate delay vectors differ in length")
        if any(d < 0 for c in cands for d in c):
            raise DataError("injected delays must be non-negative")
        object.__setattr__(self, "candidates", cands)


def _shift(dataset: TimeSeriesDataset, per_row: np.ndarray, drop: int) -> TimeSeriesDataset:
    """``per_row[k, i]`` is the delay feature ``i`` sees at original row ``k``; rows below ``drop`` go."""
    n, M = dataset.features.shape
    if drop >= M - 1:
        raise DataError(f"delay {drop} leaves fewer than 2 rows of a length-{M} series")
    kept = np.arange(drop, M)
    src = kept[:, None] - per_row[drop:]
    feats = np.empty((n, M - drop))
    for i in range(n):
        feats[i] = dataset.features[i, src[:, i]]
    t, m = dataset.start, dataset.m
    first = max(t, drop)
    if first >= t + m:
        raise DataError(f"delay {drop} consumes the whole target window")
    return TimeSeriesDataset(features=feats, target=dataset.target[first - t:], start=first - drop,
                             tick_seconds=dataset.tick_seconds, feature_names=dataset.feature_names,
                             task_kind=dataset.task_kind, target_name=dataset.target_name,
                             metadata=dict(dataset.metadata))


def _check_arity(dataset, delays):
    if len(delays) != dataset.n_features:
        raise DataError(f"{len(delays)} delays for {dataset.n_features} features")


def inject_fixed(dataset: TimeSeriesDataset, spec: FixedDelaySpec) -> TimeSeriesDataset:
    _check_arity(dataset, spec.delays)
    rows = dataset.length
    per_row = np.broadcast_to(np.asarray(spec.delays, dtype=int), (rows, dataset.n_features))
    out = _shift(dataset, per_row, max(spec.delays, default=0))
    out.metadata["injection"] = {"kind": "fixed", "delays": list(spec.delays),
                                 "dropped_rows": int(max(spec.delays, default=0))}
    return out


def stochastic_draws(spec: StochasticDelaySpec, rows: int) -> np.ndarray:
    """Candidate index per row; i.i.d. uniform over the candidate set."""
    rng = np.random.default_rng(spec.seed)
    return rng.integers(0, len(spec.candidates), size=rows)


def inject_stochastic(dataset: TimeSeriesDataset, spec: StochasticDelaySpec) -> TimeSeriesDataset:
    """Each row takes its feature values through one randomly drawn candidate delay vector."""
    cands = np.asarray(spec.candidates, dtype=int)
    _check_arity(dataset, cands[0])
    draws = stochastic_draws(spec, dataset.length)
    # the largest candidate delay sets the drop even if it is never drawn
    out = _shift(dataset, cands[draws], int(cands.max()))
    out.metadata["injection"] = {"kind": "stochastic", "candidates": [list(c) for c in spec.candidates],
                                 "seed": spec.seed, "dropped_rows": int(cands.max())}
    return out


def ground_truth(dataset: TimeSeriesDataset) -> Optional[tuple]:
    """Single reference delay vector recorded by injection or synthesis, if any.

    Stochastic injections report the rounded componentwise mean of their candidates.
    """
    info = dataset.metadata.get("injection") or dataset.metadata.get("synthetic")
    if info is None:
        return None
    if "delays" in info:
        return tuple(int(d) for d in info["delays"])
    cands = np.asarray(info["candidates"], dtype=float)
    return tuple(int(v) for v in np.floor(cands.mean(axis=0) + 0.5))


def synth_dataset(n_features: int, length: int, true_delays: Sequence[int], noise_sd: float = 0.0,
                  seed: int = 0, task_kind: str = REGRESSION, smoothness: float = 2.0,
                  weights: Optional[Sequence[float]] = None) -> TimeSeriesDataset:
    """Smooth random latents as features; the target reads them ``true_delays`` ticks ahead.

    ``y[j] = sum_i weights[i] * latent_i[j + delay_i] + noise``, thresholded at its
    median for classification.  Latents are white noise passed through a
    Gaussian filter of width ``smoothness`` ticks and standardised.
    """
    true_delays = tuple(int(d) for d in true_delays)
    if n_features < 1:
        raise DataError("n_features must be >= 1")
    if length < 2:
        raise DataError("length must be >= 2")
    if len(true_delays) != n_features or any(d < 0 for d in true_delays):
        raise DataError("need one non-negative delay per feature")
    if noise_sd < 0:
        raise DataError("noise_sd must be >= 0")
    if task_kind not in (REGRESSION, CLASSIFICATION):
        raise DataError(f"unknown task kind {task_kind!r}")
    w = np.ones(n_features) if weights is None else np.asarray(weights, dtype=float)

    rng = np.random.default_rng(seed)
    span = length + max(true_delays)
    pad = int(4 * smoothness) + 1
    raw = rng.standard_normal((n_features, span + 2 * pad))
    latents = gaussian_filter1d(raw, smoothness, axis=1, mode="wrap")[:, pad:pad + span] if smoothness > 0 \
        else raw[:, pad:pad + span]
    latents = (latents - latents.mean(axis=1, keepdims=True)) / latents.std(axis=1, keepdims=True)

    signal = sum(w[i] * latents[i, d:d + length] for i, d in enumerate(true_delays))
    y = signal + noise_sd * rng.standard_normal(length)
    if task_kind == CLASSIFICATION:
        y = (y > np.median(y)).astype(float)
    meta = {"synthetic": {"delays": list(true_delays), "noise_sd": noise_sd, "seed": seed,
                          "weights": w.tolist(), "smoothness": smoothness}}
    return TimeSeriesDataset(features=latents[:, :length], target=y, start=0,
                             feature_names=tuple(f"x{i}" for i in range(n_features)),
                             task_kind=task_kind, metadata=meta)
