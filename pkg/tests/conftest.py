import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate
from scipy import special


def owens_t_cdf(mu, t, a):
    """Independent oracle: F(a) = 1 - 4 T(mu sqrt(a), sqrt((t-a)/a))."""
    return 1.0 - 4.0 * special.owens_t(mu * math.sqrt(a), math.sqrt((t - a) / a))


def owens_t_crossing(mu, a, b):
    return 4.0 * special.owens_t(mu * math.sqrt(a), math.sqrt((b - a) / a))


def arcsine_cdf(a, t):
    return 2.0 / math.pi * math.asin(math.sqrt(a / t))


def pdf_moment(pdf, t, k):
    """int_0^t a^k pdf(a) da with a = t sin^2(theta) to tame both endpoints."""

    def f(theta):
        a = t * math.sin(theta) ** 2
        return a ** k * pdf(a) * 2.0 * t * math.sin(theta) * math.cos(theta)

    val, _ = sp_integrate.quad(f, 0.0, math.pi / 2, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
