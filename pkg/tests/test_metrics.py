import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwtw import web
from gwtw.config import ConfigError, SimConfig
from gwtw.distributions import RngStream
from gwtw.metrics import (aggregate, apply_axis, balls_in_bins_max_load, load,
                          mixed_spread_experiment, order_statistics, run_trial,
                          run_trials, sweep)
from gwtw.outcome import CONVERGED_NONOPTIMAL, CONVERGED_OPTIMAL, TIMEOUT, TrialOutcome

SMALL = SimConfig(n_u=200, n_s=200, n_c=200, kappa=2, sigma=2, tau=8, horizon=400.0, seed=3)


def fake(status, t=None):
    return TrialOutcome(status, t, np.ones(1), np.empty((0, 3)))


@pytest.mark.parametrize("n_u,n_s,kappa,expected", [
    (1000, 1000, 2, 0.5), (1000, 50, 40, 0.5), (600, 20, 30, 1.0)])
def test_load_examples(n_u, n_s, kappa, expected):
    assert load(SimConfig(n_u=n_u, n_s=n_s, n_c=10, kappa=kappa, sigma=1)) == expected


@settings(max_examples=100, deadline=None)
@given(n_s=st.integers(1, 50), kappa=st.integers(1, 50), c=st.integers(1, 10))
def test_load_scaling_invariance(n_s, kappa, c):
    a = SimConfig(n_u=1000, n_s=n_s, n_c=10, kappa=kappa * c, sigma=1)
    b = SimConfig(n_u=1000, n_s=n_s * c, n_c=10, kappa=kappa, sigma=1)
    assert load(a) == pytest.approx(load(b), rel=1e-12)


def test_minmax_hitrate_examples():
    cfg = SimConfig(n_u=4, n_s=4, n_c=4, kappa=1, sigma=2, tau=5)
    st_ = web.new_state(cfg)
    assert web.minmax_hitrate(st_) == 0.0
    st_.hits[:, 0] = 5
    assert web.minmax_hitrate(st_) == 1.0
    st_.hits[0] = [4, 3]
    assert web.minmax_hitrate(st_) == pytest.approx(0.8)


def test_order_statistics_examples():
    assert order_statistics([1, 1, 1, 1], ["min", 1, 5, 50]) == [1.0] * 4
    assert order_statistics([1.0, 0.0, 1.0, 1.0], ["min", 50]) == [0.0, 1.0]
    x = np.ones(1000)
    x[:40] = 0.0
    # nearest rank: 1st -> rank 10 (a zero), 5th -> rank 50 (a one)
    assert order_statistics(x, ["min", 1, 5, 50]) == [0.0, 0.0, 1.0, 1.0]
    with pytest.raises(ValueError):
        order_statistics([])


@settings(max_examples=200, deadline=None)
@given(xs=st.lists(st.floats(0, 1), min_size=1, max_size=300), seed=st.integers(0, 1000))
def test_order_statistics_properties(xs, seed):
    ps = ["min", 1, 5, 25, 50, 75, 100]
    got = order_statistics(xs, ps)
    perm = np.random.default_rng(seed).permutation(xs)
    assert order_statistics(perm, ps) == got
    assert all(a <= b for a, b in zip(got, got[1:]))
    assert got[0] == min(xs) and got[-1] == max(xs)
    # nearest-rank oracle straight from the definition
    s = sorted(xs)
    for p, v in zip(ps[1:], got[1:]):
        assert v == s[max(1, math.ceil(p * len(s) / 100)) - 1]


def test_aggregate_rates():
    outs = [fake(CONVERGED_OPTIMAL, 10.0), fake(CONVERGED_OPTIMAL, 20.0), fake(CONVERGED_OPTIMAL, 60.0),
            fake(CONVERGED_NONOPTIMAL, 5.0), fake(TIMEOUT)]
    p = aggregate(outs, value=3)
    assert (p.converged_optimal, p.converged_nonoptimal, p.timeout) == (3, 1, 1)
    assert p.failure_rate == 0.25 and p.timeout_rate == 0.2
    assert p.mean_time == 30.0 and p.median_time == 20.0
    assert p.sem_time == pytest.approx(np.std([10, 20, 60], ddof=1) / math.sqrt(3))
    assert aggregate([fake(TIMEOUT)]).failure_rate is None


def test_outcome_rejects_inconsistent_time():
    with pytest.raises(ValueError):
        fake(TIMEOUT, 3.0)
    with pytest.raises(ValueError):
        fake(CONVERGED_OPTIMAL, None)


def test_run_trials_partition_and_parallel_equality():
    serial = run_trials(SMALL, 4)
    parallel = run_trials(SMALL, 4, jobs=2)
    assert serial.converged_optimal + serial.converged_nonoptimal + serial.timeout == 4
    for a, b in zip(serial.outcomes, parallel.outcomes):
        assert a.status == b.status and a.convergence_time == b.convergence_time
        assert np.array_equal(a.trace, b.trace)
    with pytest.raises(ValueError):
        run_trials(SMALL, 0)


def test_sweep_is_reproducible():
    a = sweep(SMALL, "tau", [4, 8], trials=3)
    b = sweep(SMALL, "tau", [4, 8], trials=3)
    for pa, pb in zip(a.points, b.points):
        assert (pa.converged_optimal, pa.mean_time, pa.failure_rate) == \
            (pb.converged_optimal, pb.mean_time, pb.failure_rate)
    assert a.point(8).trials == 3
    with pytest.raises(ConfigError):
        sweep(SMALL, "tau", [])


def test_apply_axis_nu_over_ns_keeps_load():
    base = SimConfig(n_u=1000, n_s=1000, n_c=1000, kappa=2)
    for ratio, n_s, kappa in [(1, 1000, 2), (10, 100, 20), (20, 50, 40)]:
        c = apply_axis(base, "nu_over_ns", ratio)
        assert (c.n_s, c.kappa) == (n_s, kappa) and load(c) == 0.5
    with pytest.raises(ConfigError):
        apply_axis(base, "nu_over_ns", 700)  # 1000/700 servers rounds to 1 (30% off)
    with pytest.raises(ConfigError):
        apply_axis(base, "bogus", 1)
    assert apply_axis(base.replace(f=0.5), "sigma", 3).f is None


def test_video_trial_through_run_trial():
    out = run_trial(SMALL.replace(kappa=4, horizon=50), 0, "video")
    assert out.model == "video" and out.status == CONVERGED_OPTIMAL
    with pytest.raises(ValueError):
        run_trial(SMALL, 0, "audio")


def test_mixed_spread_shape():
    cfg = SimConfig(n_u=100, n_s=100, n_c=100, kappa=2, f=1.0, tau=5, seed=1)
    rows = mixed_spread_experiment(cfg, measure_at=50.0, trials=2)
    assert rows.shape == (2, 4)
    assert np.all(np.diff(rows, axis=1) >= 0)


def test_balls_in_bins_full_spread_and_errors():
    loads = balls_in_bins_max_load(7, 5, 5, 3, RngStream(0))
    assert loads.tolist() == [7, 7, 7]
    with pytest.raises(ValueError):
        balls_in_bins_max_load(7, 5, 6, 3, RngStream(0))


def test_balls_in_bins_typical_range():
    loads = balls_in_bins_max_load(1000, 1000, 1, 50, RngStream(1))
    assert np.mean((loads >= 4) & (loads <= 12)) >= 0.9
