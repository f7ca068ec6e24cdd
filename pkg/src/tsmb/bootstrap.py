"""Moving-block bootstrap of a training window.

A resample is a list of blocks.  Each block is a view of the original dataset
(same feature matrix, shifted target window), so delayed feature lookups inside
a block read the true history rather than whatever sits across a seam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import TimeSeriesDataset
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class BlockBootstrapSpec:
    block_fraction: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.block_fraction <= 1.0:
            raise ConfigError(f"block_fraction must lie in (0, 1], got {self.block_fraction}")


@dataclass(frozen=True, eq=False)
class BootstrapSample:
    source: TimeSeriesDataset
    starts: tuple  # block offsets relative to the source target window
    lengths: tuple

    @property
    def m(self) -> int:
        return sum(self.lengths)

    @property
    def blocks(self) -> list:
        t = self.source.start
        return [self.source.view(t + s, n) for s, n in zip(self.starts, self.lengths)]

    @property
    def weights(self) -> list:
        """Block length over total length."""
        m = self.m
        return [n / m for n in self.lengths]

    @property
    def target(self) -> np.ndarray:
        y = self.source.target
        return np.concatenate([y[s:s + n] for s, n in zip(self.starts, self.lengths)])

    def features(self) -> np.ndarray:
        """Concatenated feature windows over each block's target span, shape (n, m)."""
        X = self.source.features
        t = self.source.start
        return np.concatenate([X[:, t + s:t + s + n] for s, n in zip(self.starts, self.lengths)], axis=1)


def block_length(m: int, spec: BlockBootstrapSpec) -> int:
    return int(math.floor(spec.block_fraction * m + 0.5))


def block_bootstrap_sample(train: TimeSeriesDataset, spec: BlockBootstrapSpec,
                           replicate_index: int) -> BootstrapSample:
    """Draw ``ceil(m / L)`` block starts uniformly from ``[0, m - L]``; the last block is cut to fit ``m``."""
    m = train.m
    L = block_length(m, spec)
    if L < 2:
        raise DataError(f"block length {L} (fraction {spec.block_fraction} of {m} rows) is below 2")
    n_blocks = -(-m // L)
    rng = np.random.default_rng([int(spec.seed), int(replicate_index)])
    starts = rng.integers(0, m - L + 1, size=n_blocks)
    lengths = [L] * (n_blocks - 1) + [m - L * (n_blocks - 1)]
    return BootstrapSample(source=train, starts=tuple(int(s) for s in starts), lengths=tuple(lengths))
