import math

import numpy as np
import pytest

from lastzero.distribution import (
    CrossingWindow,
    DriftedBMParams,
    crossing_probability,
    last_zero_cdf,
    last_zero_mean,
    last_zero_variance,
)
from lastzero.montecarlo import (
    PATH_BLOCK,
    McConfig,
    MCEstimate,
    bridge_cross_prob,
    estimate_crossing,
    estimate_last_zero_cdf,
    simulate_last_zero,
    simulate_paths,
)
from lastzero.sampling import RngSeed

P = DriftedBMParams(1.0, 1.0)
W = CrossingWindow(0.5, 1.0)


def test_bridge_cross_prob():
    assert bridge_cross_prob(1.0, -1.0, 0.1) == 1.0
    assert bridge_cross_prob(0.0, 2.0, 0.1) == 1.0
    assert bridge_cross_prob(1.0, 1.0, 1.0) == pytest.approx(math.exp(-2.0), rel=1e-15)
    assert bridge_cross_prob(1.0, 1.0, 1e-6) == 0.0
    assert np.allclose(bridge_cross_prob(np.array([1.0, -1.0]), np.array([1.0, 1.0]), 1.0),
                       [math.exp(-2.0), 1.0])
    for dt in (0.0, -1.0):
        with pytest.raises(ValueError):
            bridge_cross_prob(1.0, 1.0, dt)


def test_config_invariants():
    with pytest.raises(ValueError):
        McConfig(99, 1e-3)
    with pytest.raises(ValueError):
        McConfig(1000, 0.0)
    with pytest.raises(ValueError):
        simulate_last_zero(P, McConfig(1000, 0.2))
    est = MCEstimate.from_count(30, 100)
    assert est.stderr == pytest.approx(math.sqrt(0.3 * 0.7 / 100))


def test_paths_match_euler_recursion():
    cfg = McConfig(200, 0.01, RngSeed(4))
    x = simulate_paths(P, cfg, block=1)
    assert x.shape == (200 - PATH_BLOCK, 101)
    assert np.all(x[:, 0] == 0.0)
    steps = np.diff(x, axis=1)
    # increments are N(mu dt, dt)
    z = (steps - 0.01) / 0.1
    assert abs(z.mean()) < 0.05 and abs(z.std() - 1) < 0.05


def test_times_in_range_and_cdf_at_horizon():
    cfg = McConfig(5000, 1e-3, RngSeed(1))
    times = simulate_last_zero(P, cfg)
    assert times.shape == (5000,)
    assert np.all((times >= 0) & (times <= 1))
    assert np.any(times == 0.0)
    est = estimate_last_zero_cdf(P, 1.0, cfg)
    assert est.p_hat == 1.0 and est.stderr == 0.0


def test_stderr_bound():
    for n in (100, 1000, 12345):
        est = estimate_last_zero_cdf(P, 0.3, McConfig(n, 1e-2, RngSeed(n)))
        assert est.stderr <= 0.5 / math.sqrt(n)
        assert est.n == n


def test_reproducible_and_worker_independent():
    cfg = McConfig(3 * PATH_BLOCK + 5, 1e-3, RngSeed(9))
    a = simulate_last_zero(P, cfg, workers=1)
    b = simulate_last_zero(P, cfg, workers=4)
    assert np.array_equal(a, b)
    assert estimate_crossing(1.0, W, cfg, workers=1) == estimate_crossing(1.0, W, cfg, workers=3)
    other = McConfig(cfg.n_paths, cfg.dt, RngSeed(9, 1))
    assert not np.array_equal(a, simulate_last_zero(P, other))


def test_bridge_increases_detection():
    for seed in range(3):
        on = McConfig(2000, 1e-3, RngSeed(seed), True)
        off = McConfig(2000, 1e-3, RngSeed(seed), False)
        # identical increments, so the corrected last zero can only move later
        assert np.all(simulate_last_zero(P, on) >= simulate_last_zero(P, off))
        assert estimate_crossing(1.0, W, on).p_hat >= estimate_crossing(1.0, W, off).p_hat


def test_agreement_with_quadrature_moderate():
    cfg = McConfig(40000, 1e-3, RngSeed(21))
    est = estimate_last_zero_cdf(P, 0.3, cfg)
    assert abs(est.p_hat - last_zero_cdf(P, 0.3)) < 4 * est.stderr
    est = estimate_crossing(1.0, W, cfg)
    assert abs(est.p_hat - crossing_probability(1.0, W)) < 4 * est.stderr


def test_no_bridge_bias_shrinks_with_dt():
    exact = last_zero_cdf(P, 0.3)
    errs = [estimate_last_zero_cdf(P, 0.3, McConfig(200000, dt, RngSeed(8), False)).p_hat - exact
            for dt in (0.02, 0.01, 0.005, 0.0025)]
    # missed zeros push the last zero earlier, so the bias is positive
    assert all(e > 0 for e in errs)
    assert all(x > y for x, y in zip(errs, errs[1:]))


def test_crossing_vanishing_window():
    cfg = McConfig(5000, 1e-3, RngSeed(2))
    est = estimate_crossing(5.0, CrossingWindow(0.5, 0.501), cfg)
    assert est.p_hat < 0.01
    with pytest.raises(ValueError):
        estimate_crossing(1.0, CrossingWindow(0.5, 0.5005), cfg)
    with pytest.raises(ValueError):
        estimate_crossing(1.0, W, cfg, horizon=0.9)


def test_crossing_decreases_with_drift():
    cfg = McConfig(20000, 1e-3, RngSeed(17))
    vals = [estimate_crossing(mu, W, cfg).p_hat for mu in (0.5, 1.0, 2.0)]
    assert vals[0] > vals[1] > vals[2]


def test_crossing_horizon_only_sets_grid():
    cfg = McConfig(1000, 1e-3, RngSeed(3))
    assert estimate_crossing(1.0, W, cfg, horizon=2.0) == estimate_crossing(1.0, W, cfg)


@pytest.mark.slow
def test_large_drift_mean():
    p = DriftedBMParams(10.0, 1.0)
    n = 10 ** 5
    times = simulate_last_zero(p, McConfig(n, 1e-4, RngSeed(10)))
    stderr = math.sqrt(last_zero_variance(p) / n)
    assert abs(times.mean() - last_zero_mean(p)) < 4 * stderr


@pytest.mark.slow
@pytest.mark.parametrize("dt", [1e-3, 1e-4])
def test_bias_ordering(dt):
    exact = last_zero_cdf(P, 0.3)
    for seed in range(5):
        on = estimate_last_zero_cdf(P, 0.3, McConfig(50000, dt, RngSeed(seed), True))
        off = estimate_last_zero_cdf(P, 0.3, McConfig(50000, dt, RngSeed(seed), False))
        assert abs(on.p_hat - exact) <= abs(off.p_hat - exact)
