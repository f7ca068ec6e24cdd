from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsmb.bootstrap import BlockBootstrapSpec
from tsmb.dataset import DelayVector, SplitSpec, split
from tsmb.ensemble import (TsmbConfig, TsmbModel, mean_delay, nearest_rank, percentile_interval,
                           perturb_delays, perturbed_train, round_half_away, summarise, tdb_train,
                           tde_point_train, tsmb_predict, tsmb_train)
from tsmb.errors import ConfigError, DataError
from tsmb.injection import synth_dataset
from tsmb.learners import LearnerSpec
from tsmb.optimizer import SearchBox


@pytest.fixture(scope="module")
def small():
    ds = synth_dataset(2, 600, (6, 11), noise_sd=0.3, seed=4, smoothness=1.5)
    train, _, test = split(ds, SplitSpec(0.6, 0.0, 0.4))
    box = SearchBox.for_delays(0, 20, (1, 3), n_features=2, budget=150)
    cfg = TsmbConfig(box=box, B=6, learner=LearnerSpec(kind="linear"), seed=3)
    return train, test, cfg


@pytest.fixture(scope="module")
def trained(small):
    train, _, cfg = small
    return tsmb_train(train, cfg)


def test_members_are_nested_across_b(small, trained):
    train, _, cfg = small
    smaller = tsmb_train(train, replace(cfg, B=3))
    for a, b in zip(smaller.members, trained.members[:3]):
        assert a.delay == b.delay
        assert a.learner.state == b.learner.state


def test_explicit_member_indices_match_full_run(small, trained):
    train, _, cfg = small
    picked = tsmb_train(train, cfg, members=[4])
    assert picked.members[0].delay == trained.members[4].delay


def test_workers_do_not_change_results(small, trained):
    train, _, cfg = small
    par = tsmb_train(train, cfg, workers=2)
    assert [m.delay for m in par.members] == [m.delay for m in trained.members]
    assert [m.learner.state for m in par.members] == [m.learner.state for m in trained.members]


def test_predict_mean_is_member_mean_and_order_free(small, trained):
    _, test, _ = small
    dist = tsmb_predict(trained, test, alpha=0.2)
    assert np.allclose(dist.mean, dist.members.mean(axis=0), atol=1e-12, rtol=0)
    rev = tsmb_predict(TsmbModel(trained.members[::-1]), test, alpha=0.2)
    assert np.array_equal(rev.mean, dist.mean)
    assert np.array_equal(rev.lower, dist.lower) and np.array_equal(rev.upper, dist.upper)


def test_single_member_interval_collapses(small, trained):
    _, test, _ = small
    dist = tsmb_predict(trained.prefix(1), test, alpha=0.05)
    assert np.array_equal(dist.lower, dist.upper) and np.array_equal(dist.lower, dist.mean)


def test_prefix_bounds(trained):
    with pytest.raises(ConfigError):
        trained.prefix(0)
    with pytest.raises(ConfigError):
        trained.prefix(trained.B + 1)


def test_nearest_rank_convention():
    vals = np.arange(1.0, 11.0)[:, None]  # B = 10
    assert nearest_rank(vals, 0.025)[0] == 1.0
    assert nearest_rank(vals, 0.975)[0] == 10.0
    assert nearest_rank(vals, 0.5)[0] == 5.0
    assert nearest_rank(vals, 0.1)[0] == 1.0  # ceil(1.0) exactly, not bumped by rounding


@settings(max_examples=50)
@given(st.integers(1, 40), st.integers(0, 1000))
def test_intervals_nest_as_alpha_shrinks(B, seed):
    vals = np.sort(np.random.default_rng(seed).standard_normal((B, 5)), axis=0)
    prev = None
    for a in (0.5, 0.2, 0.05):
        lo, hi = percentile_interval(vals, a)
        assert (lo <= hi).all()
        if prev is not None:
            assert (lo <= prev[0]).all() and (hi >= prev[1]).all()
        prev = (lo, hi)


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=12), st.randoms())
def test_summarise_is_permutation_invariant(values, rnd):
    members = np.array(values)[:, None]
    order = list(range(len(values)))
    rnd.shuffle(order)
    shuffled = members[order]
    assert np.array_equal(summarise(members).mean, summarise(shuffled).mean)


def test_round_half_away_from_zero():
    assert list(round_half_away([0.5, 1.5, 2.5, -0.5, 2.49])) == [1, 2, 3, -1, 2]
    dv = mean_delay([DelayVector((1, 4), 1), DelayVector((2, 5), 2)])
    assert dv == DelayVector((2, 5), 2)


def test_tdb_uses_rounded_mean_of_bootstrap_delays(small):
    train, _, cfg = small
    pm = tdb_train(train, cfg)
    assert len(pm.bootstrap_delays) == cfg.B
    assert pm.delay == mean_delay(pm.bootstrap_delays)


def test_perturbation_zero_sigma_reproduces_point(small):
    train, _, cfg = small
    point = tde_point_train(train, cfg)
    model = perturbed_train(train, cfg, sigma=0.0)
    assert all(m.delay == point.delay for m in model.members)


@settings(max_examples=30)
@given(st.floats(0.0, 2.0), st.integers(0, 100))
def test_perturbed_delays_stay_in_box(sigma, seed):
    box = SearchBox.for_delays(2, 25, (1, 4), n_features=3)
    out = perturb_delays(DelayVector((3, 20, 10), 2), box, sigma, seed, 8)
    assert all(box.contains(dv.as_point()) and dv.window == 2 for dv in out)


def test_recovers_true_delays_on_noiseless_data():
    ds = synth_dataset(2, 800, (4, 13), noise_sd=0.0, seed=1, smoothness=0.5)
    train, _, _ = split(ds, SplitSpec(0.5, 0.25, 0.25))
    cfg = TsmbConfig(box=SearchBox.for_delays(0, 20, (1, 1), n_features=2, budget=400), B=4,
                     learner=LearnerSpec(kind="linear"), bootstrap=BlockBootstrapSpec(0.5))
    model = tsmb_train(train, cfg)
    assert all(m.delay.delays == (4, 13) for m in model.members)


def test_member_error_names_the_member():
    ds = synth_dataset(1, 60, (0,), seed=0)
    train, _, _ = split(ds, SplitSpec(0.5, 0.25, 0.25))
    cfg = TsmbConfig(box=SearchBox.for_delays(0, 40, (1, 1), n_features=1, budget=50), B=2,
                     bootstrap=BlockBootstrapSpec(0.05))
    with pytest.raises(DataError, match="member 0"):
        tsmb_train(train, cfg)
