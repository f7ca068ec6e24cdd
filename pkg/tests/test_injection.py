import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsmb.dataset import DelayVector, TimeSeriesDataset, align
from tsmb.errors import DataError
from tsmb.injection import (FixedDelaySpec, StochasticDelaySpec, ground_truth, inject_fixed, inject_stochastic,
                            stochastic_draws, synth_dataset)


def clean(n=2, M=60, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, M))
    return TimeSeriesDataset(X, X.sum(axis=0))  # target aligned at delay 0


def test_fixed_injection_is_undone_by_aligning_at_the_same_delay():
    ds = clean()
    out = inject_fixed(ds, FixedDelaySpec((3, 7)))
    assert out.m == ds.m - 7 and out.length == ds.length - 7
    aligned = align(out, DelayVector((3, 7), 1))
    assert np.array_equal(aligned.design.sum(axis=1), aligned.target)
    assert out.metadata["injection"] == {"kind": "fixed", "delays": [3, 7], "dropped_rows": 7}


@settings(max_examples=40)
@given(st.lists(st.integers(0, 12), min_size=1, max_size=3))
def test_fixed_injection_moves_values_later(delays):
    ds = clean(n=len(delays), M=40)
    out = inject_fixed(ds, FixedDelaySpec(tuple(delays)))
    D = max(delays)
    for i, d in enumerate(delays):
        # injected row k (relative to the kept rows) holds clean row k + D - d
        assert np.array_equal(out.features[i], ds.features[i, D - d:ds.length - d])
    assert np.array_equal(out.target, ds.target[D:])


def test_zero_injection_is_identity():
    ds = clean()
    out = inject_fixed(ds, FixedDelaySpec((0, 0)))
    assert np.array_equal(out.features, ds.features) and np.array_equal(out.target, ds.target)


def test_injection_errors():
    ds = clean(M=10)
    with pytest.raises(DataError):
        inject_fixed(ds, FixedDelaySpec((1,)))
    with pytest.raises(DataError):
        inject_fixed(ds, FixedDelaySpec((1, 9)))
    with pytest.raises(DataError):
        FixedDelaySpec((-1, 0))
    with pytest.raises(DataError):
        StochasticDelaySpec(((1, 2), (1,)))


def test_stochastic_injection_draws_each_row_from_a_candidate():
    ds = clean(M=200)
    spec = StochasticDelaySpec(((1, 2), (4, 0), (6, 6)), seed=5)
    out = inject_stochastic(ds, spec)
    D = 6
    draws = stochastic_draws(spec, ds.length)
    cands = np.array(spec.candidates)
    for k in range(out.length):
        row = k + D
        for i in range(2):
            assert out.features[i, k] == ds.features[i, row - cands[draws[row], i]]
    assert out.metadata["injection"]["candidates"] == [[1, 2], [4, 0], [6, 6]]
    assert ground_truth(out) == (4, 3)  # rounded candidate mean (11/3, 8/3)


def test_stochastic_draws_are_seeded_and_roughly_uniform():
    spec = StochasticDelaySpec(((0,), (1,), (2,), (3,), (4,)), seed=1)
    a, b = stochastic_draws(spec, 5000), stochastic_draws(spec, 5000)
    assert np.array_equal(a, b)
    freq = np.bincount(a, minlength=5) / 5000
    assert np.all(np.abs(freq - 0.2) < 0.03)


def test_single_candidate_matches_fixed_injection():
    ds = clean()
    a = inject_stochastic(ds, StochasticDelaySpec(((2, 5),), seed=3))
    b = inject_fixed(ds, FixedDelaySpec((2, 5)))
    assert np.array_equal(a.features, b.features) and np.array_equal(a.target, b.target)


def test_synth_target_reads_latents_at_true_delays():
    ds = synth_dataset(2, 300, (4, 9), noise_sd=0.0, seed=2, smoothness=1.0)
    aligned = align(ds, DelayVector((4, 9), 1))
    assert np.allclose(aligned.design.sum(axis=1), aligned.target)
    assert ground_truth(ds) == (4, 9)
    cls = synth_dataset(2, 300, (4, 9), seed=2, task_kind="classification")
    assert set(np.unique(cls.target)) == {0.0, 1.0}
