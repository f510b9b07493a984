import math

import numpy as np
import pytest
from scipy import stats

from lastzero.distribution import DriftedBMParams, LimitLaw, last_zero_cdf, last_zero_mean, last_zero_variance
from lastzero.errors import ConvergenceError
from lastzero.sampling import (
    SAMPLE_BLOCK,
    RngSeed,
    RootFindConfig,
    block_generator,
    limit_law_quantile,
    quantile,
    sample_last_zero,
    sample_limit_law,
    worker_count,
)

P = DriftedBMParams(1.0, 1.0)


def test_seed_validation():
    with pytest.raises(ValueError):
        RngSeed(-1)
    with pytest.raises(ValueError):
        RngSeed(0, 1 << 64)
    assert RngSeed(3, 2).key == 3 | (2 << 64)
    with pytest.raises(ValueError):
        RootFindConfig(p_tol=0.0)


def test_blocks_are_independent_of_order():
    a = block_generator(RngSeed(7), 5).random(4)
    block_generator(RngSeed(7), 4).random(100)
    assert np.array_equal(a, block_generator(RngSeed(7), 5).random(4))
    assert not np.array_equal(a, block_generator(RngSeed(7, 1), 5).random(4))


def test_quantile_endpoints():
    assert quantile(P, 0.0) == 0.0
    assert quantile(P, 1.0) == 1.0
    with pytest.raises(ValueError):
        quantile(P, 1.5)


def test_quantile_round_trip_grid():
    cfg = RootFindConfig()
    probs = np.arange(1, 100) / 100
    qs = [quantile(P, q, cfg) for q in probs]
    assert all(x <= y for x, y in zip(qs, qs[1:]))
    for q, a in zip(probs, qs):
        # either tolerance may stop the iteration; both imply a tight fit here
        assert abs(last_zero_cdf(P, a) - q) < 1e-9


def test_quantile_driftless_median():
    assert abs(quantile(DriftedBMParams(1e-6, 1.0), 0.5) - 0.5) < 1e-5


def test_quantile_nonconvergence():
    with pytest.raises(ConvergenceError):
        quantile(P, 0.3, RootFindConfig(x_tol=1e-300, p_tol=1e-300, max_iter=3))


def test_limit_law_quantile():
    law = LimitLaw(1.5)
    for q in (0.0, 0.05, 0.5, 0.99):
        assert limit_law_quantile(law, q) == pytest.approx(stats.chi2(1, scale=1 / 2.25).ppf(q), rel=1e-8, abs=1e-12)
    assert limit_law_quantile(law, 1.0) == math.inf


def test_samples_are_inverse_cdf_of_uniforms():
    seed = RngSeed(11)
    x = sample_last_zero(P, 1000, seed)
    u = block_generator(seed, 0).random(1000)
    assert np.allclose([last_zero_cdf(P, a) for a in x], u, atol=1e-9)
    y = sample_limit_law(LimitLaw(1.0), 1000, seed)
    assert np.allclose(stats.chi2(1).cdf(y), u, atol=1e-6)


def test_determinism_and_worker_independence():
    n = 2 * SAMPLE_BLOCK + 17
    a = sample_last_zero(P, n, RngSeed(5), workers=1)
    b = sample_last_zero(P, n, RngSeed(5), workers=3)
    assert np.array_equal(a, b)
    assert np.array_equal(a[:100], sample_last_zero(P, 100, RngSeed(5)))
    assert not np.array_equal(a[:100], sample_last_zero(P, 100, RngSeed(5, 1)))


def test_thread_env(monkeypatch):
    monkeypatch.setenv("LASTZERO_THREADS", "2")
    assert worker_count() == 2
    monkeypatch.setenv("LASTZERO_THREADS", "0")
    assert worker_count() >= 1
    assert worker_count(5) == 5


def test_sample_mean_clt():
    n = 10 ** 6
    x = sample_last_zero(P, n, RngSeed(2024))
    assert np.all((x >= 0) & (x <= 1))
    bound = 4 * math.sqrt(last_zero_variance(P) / n)
    assert abs(x.mean() - last_zero_mean(P)) < bound


def test_limit_law_samples():
    n = 10 ** 5
    y = sample_limit_law(LimitLaw(2.0), n, RngSeed(3))
    assert np.all(y >= 0)
    assert abs(y.mean() - 0.25) < 4 * math.sqrt((2 / 16) / n)
    assert stats.kstest(y, stats.chi2(1, scale=0.25).cdf).statistic < 1.36 / math.sqrt(n)
