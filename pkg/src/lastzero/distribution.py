"""Closed-form law of the last zero of a drifted Brownian motion.

For ``X(s) = B(s) + mu*s`` let ``T`` be the last time in ``[0, t]`` with
``X = 0``. With ``c = mu**2 * a / 2`` and ``Y = sqrt((t - a)/a)``::

    P(T > a) = (2/pi) * int_0^Y exp(-c(1+y^2)) / (1+y^2) dy

Every probability here reduces to that integral with some ``(c, Y)``.
Two evaluation routes are kept on purpose:

* the *direct* route integrates ``exp(-c sec^2 th)`` over
  ``th in [0, atan Y]`` (from ``y = tan th``) and gives the
  probability itself, which underflows once ``c`` passes ~700;
* the *factored* route pulls ``exp(-c)`` out analytically and integrates
  ``exp(-c y^2)/(1+y^2)``, giving ``log P`` for arbitrarily large ``c``.

Both routes use bounded, smooth integrands, so no raw inverse-square-root
kernel ever reaches the quadrature engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .quadrature import (
    DEFAULT_CONFIG,
    QuadratureConfig,
    integrate,
    integrate_batch,
    integrate_semi_infinite,
)

__all__ = [
    "DriftedBMParams",
    "CrossingWindow",
    "RateFunctionJ",
    "RateFunctionJTilde",
    "LimitLaw",
    "last_zero_cdf",
    "last_zero_log_survival",
    "last_zero_pdf",
    "last_zero_mean",
    "last_zero_variance",
    "crossing_probability",
    "crossing_log_probability",
    "limit_law_cdf",
    "limit_law_mean",
    "limit_law_variance",
    "rate_J",
    "rate_J_tilde",
]

_TWO_OVER_PI = 2.0 / math.pi
_LOG_TWO_OVER_PI = math.log(_TWO_OVER_PI)
# exp(-v^2) is below 1e-690 past this point
_GAUSS_CUTOFF = 40.0


def _check_mu(mu):
    mu = float(mu)
    if not math.isfinite(mu) or mu == 0.0:
        raise ValueError(f"mu must be nonzero and finite, got {mu}")
    return mu


@dataclass(frozen=True)
class DriftedBMParams:
    """Drift ``mu`` and horizon ``t`` of ``B(s) + mu*s`` observed on ``[0, t]``."""

    mu: float
    t: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _check_mu(self.mu))
        t = float(self.t)
        if not (math.isfinite(t) and t > 0):
            raise ValueError(f"t must be positive and finite, got {self.t}")
        object.__setattr__(self, "t", t)

    @classmethod
    def scaled(cls, mu: float, r: float, t: float) -> "DriftedBMParams":
        """Parameters of ``T_{mu sqrt(r), t}``, the member ``r`` of the scaled family."""
        if not r > 0:
            raise ValueError(f"r must be positive, got {r}")
        return cls(mu * math.sqrt(r), t)

    @property
    def half_mu2(self) -> float:
        return 0.5 * self.mu * self.mu


@dataclass(frozen=True)
class CrossingWindow:
    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (0 < a < b and math.isfinite(b)):
            raise ValueError(f"crossing window needs 0 < a < b, got a={self.a}, b={self.b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class RateFunctionJ:
    """Rate ``mu^2 b / 2`` on ``[0, t]``, infinite elsewhere (speed ``r``)."""

    mu: float
    t: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _check_mu(self.mu))
        if not self.t > 0:
            raise ValueError(f"t must be positive, got {self.t}")

    def __call__(self, b):
        return rate_J(self, b)


@dataclass(frozen=True)
class RateFunctionJTilde:
    """Rate ``mu^2 b / 2`` on ``[0, inf)``; the moderate-deviation rate."""

    mu: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _check_mu(self.mu))

    def __call__(self, b):
        return rate_J_tilde(self, b)


@dataclass(frozen=True)
class LimitLaw:
    """Weak limit ``Y`` of ``r * T_{mu sqrt(r), t}`` as ``r -> inf``."""

    mu: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _check_mu(self.mu))


def _require(result, what):
    if not result.converged:
        raise ConvergenceError(
            f"quadrature for {what} did not converge (err={result.err_estimate:.3g})")
    return result.value


# -- the two routes ----------------------------------------------------------

def _direct_tail(c, upper, cfg):
    """(2/pi) * int_0^upper exp(-c(1+y^2))/(1+y^2) dy, upper may be inf."""
    theta_max = math.atan(upper)
    if theta_max == 0.0:
        return 0.0

    def f(th):
        ct = np.cos(th)
        return np.exp(-c / (ct * ct))

    return _TWO_OVER_PI * _require(integrate(f, 0.0, theta_max, cfg), "a tail probability")


def _factored_integral(c, upper, cfg):
    """int_0^upper exp(-c y^2)/(1+y^2) dy, upper may be inf.

    Small ``c`` is handled with ``y = tan th``; large ``c`` with
    ``y = v / sqrt(c)`` so the Gaussian bump has unit width.
    """
    if upper == 0.0:
        return 0.0
    if c <= 1.0:
        def f(th):
            tt = np.tan(th)
            return np.exp(-c * tt * tt)
        res = integrate(f, 0.0, math.atan(upper), cfg)
        return _require(res, "a factored tail integral")
    sc = math.sqrt(c)
    vmax = min(upper * sc, _GAUSS_CUTOFF)

    def g(v):
        return np.exp(-v * v) / (1.0 + v * v / c)

    return _require(integrate(g, 0.0, vmax, cfg), "a factored tail integral") / sc


def _log_tail(c, upper, cfg):
    """log[(2/pi) int_0^upper exp(-c(1+y^2))/(1+y^2) dy] without forming exp(-c)."""
    inner = _factored_integral(c, upper, cfg)
    if inner <= 0.0:
        return -math.inf
    return -c + _LOG_TWO_OVER_PI + math.log(inner)


# -- distribution of T_{mu,t} -------------------------------------------------

def last_zero_cdf(p: DriftedBMParams, a: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``P(T_{mu,t} <= a)``; 0 below the support and 1 above it."""
    a = float(a)
    if a <= 0.0:
        return 0.0
    if a >= p.t:
        return 1.0
    upper = math.sqrt((p.t - a) / a)
    return 1.0 - _direct_tail(p.half_mu2 * a, upper, cfg)


def last_zero_log_survival(p: DriftedBMParams, z: float,
                           cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``log P(T_{mu,t} >= z)`` for ``z`` in ``[0, t]``.

    The factor ``exp(-mu^2 z / 2)`` is kept as an additive term, so the
    result stays finite for any ``z < t`` however large the drift. At
    ``z = t`` the probability is zero and ``-inf`` is returned.
    """
    z = float(z)
    if not 0.0 <= z <= p.t:
        raise ValueError(f"z must lie in [0, t={p.t}], got {z}")
    if z == 0.0:
        return 0.0
    return _log_tail(p.half_mu2 * z, math.sqrt((p.t - z) / z), cfg)


def last_zero_pdf(p: DriftedBMParams, a: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Density of ``T_{mu,t}``; ``+inf`` at the endpoints 0 and t, 0 outside."""
    a = float(a)
    t = p.t
    if a < 0.0 or a > t:
        return 0.0
    if a == 0.0 or a == t:
        return math.inf
    h = p.half_mu2
    first = math.exp(-h * t) / (math.pi * math.sqrt(a * (t - a)))
    # inner integral over y in [a, t] after y = a + u^2
    res = integrate(lambda u: np.exp(-h * u * u), 0.0, math.sqrt(t - a), cfg)
    second = p.mu * p.mu / (math.pi * math.sqrt(a)) * math.exp(-h * a) * _require(res, "the density")
    return first + second


def _mean_factor(x):
    """(1 - e^-x) / x, continuous at 0."""
    return 1.0 if x == 0.0 else -math.expm1(-x) / x


def _second_moment_factor(x):
    """int_0^1 u e^{-xu} du = (1 - e^{-x}(1+x)) / x^2, continuous at 0."""
    if x < 0.5:
        # alternating series, converged to round-off well before 30 terms for x < 0.5
        term, total = 1.0, 0.5
        for k in range(1, 30):
            term *= -x / k
            total += term / (k + 2)
        return total
    return -(math.expm1(-x) + x * math.exp(-x)) / (x * x)


def last_zero_mean(p: DriftedBMParams) -> float:
    """``E[T_{mu,t}] = (1 - exp(-mu^2 t/2)) / mu^2``."""
    x = p.half_mu2 * p.t
    return 0.5 * p.t * _mean_factor(x)


def last_zero_variance(p: DriftedBMParams) -> float:
    """``Var[T_{mu,t}]`` from ``E[T^2] = (3/4) int_0^t a exp(-mu^2 a/2) da``.

    Algebraically equal to
    ``-(3t/(2mu^2))e^{-mu^2t/2} + 3(1-e^{-mu^2t/2})/mu^4 - (1-e^{-mu^2t/2})^2/mu^4``
    but evaluated through bounded factors, so it neither cancels
    catastrophically for tiny drift nor overflows for huge drift.
    """
    x = p.half_mu2 * p.t
    t2 = p.t * p.t
    second = 0.75 * t2 * _second_moment_factor(x)
    mean = 0.5 * p.t * _mean_factor(x)
    return second - mean * mean


# -- crossing probability -----------------------------------------------------

def crossing_probability(mu: float, w: CrossingWindow,
                         cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Probability that ``B(s) + mu*s`` has a zero in ``[a, b]``.

    Uses the form obtained with ``s = a y^2``:
    ``(2/pi) int_0^{sqrt((b-a)/a)} exp(-(mu^2 a/2)(1+y^2))/(1+y^2) dy``.
    """
    mu = _check_mu(mu)
    return _direct_tail(0.5 * mu * mu * w.a, math.sqrt((w.b - w.a) / w.a), cfg)


def crossing_log_probability(mu: float, w: CrossingWindow,
                             cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``log`` of :func:`crossing_probability`, finite for any drift."""
    mu = _check_mu(mu)
    return _log_tail(0.5 * mu * mu * w.a, math.sqrt((w.b - w.a) / w.a), cfg)


# -- limit law G --------------------------------------------------------------

def limit_law_cdf(law: LimitLaw, a: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``G(a) = 1 - (2/pi) int_0^inf exp(-(mu^2 a/2)(1+y^2))/(1+y^2) dy``."""
    a = float(a)
    if a <= 0.0:
        return 0.0
    c = 0.5 * law.mu * law.mu * a
    if c > 745.0:
        # the integrand is below the smallest double everywhere
        return 1.0

    def f(y):
        q = 1.0 + y * y
        return np.exp(-c * q) / q

    res = integrate_semi_infinite(f, 0.0, cfg)
    return 1.0 - _TWO_OVER_PI * _require(res, "the limit law")


def limit_law_mean(law: LimitLaw) -> float:
    return 1.0 / law.mu ** 2


def limit_law_variance(law: LimitLaw) -> float:
    return 2.0 / law.mu ** 4


# -- rate functions -----------------------------------------------------------

def rate_J(rf: RateFunctionJ, b: float) -> float:
    """Large-deviation rate of ``T_{mu sqrt(r), t}`` at ``b``."""
    if 0.0 <= b <= rf.t:
        return 0.5 * rf.mu * rf.mu * b
    return math.inf


def rate_J_tilde(rf: RateFunctionJTilde, b: float) -> float:
    """Rate of ``r gamma_r T_{mu sqrt(r), t}`` at ``b``."""
    if b >= 0.0:
        return 0.5 * rf.mu * rf.mu * b
    return math.inf


# -- vectorised CDFs for the samplers -----------------------------------------

def _cdf_many(p: DriftedBMParams, a: np.ndarray, cfg: QuadratureConfig = DEFAULT_CONFIG) -> np.ndarray:
    """:func:`last_zero_cdf` over an array of points in one quadrature batch."""
    a = np.asarray(a, dtype=float)
    out = np.where(a >= p.t, 1.0, 0.0)
    inside = (a > 0.0) & (a < p.t)
    ai = a[inside]
    if ai.size:
        c = p.half_mu2 * ai
        theta_max = np.arctan2(np.sqrt(p.t - ai), np.sqrt(ai))

        def f(th, rows):
            ct = np.cos(th)
            return np.exp(-c[rows][:, None] / (ct * ct))

        res = integrate_batch(f, np.zeros_like(ai), theta_max, cfg)
        if not np.all(res.converged):
            raise ConvergenceError("batched CDF quadrature did not converge")
        out[inside] = 1.0 - _TWO_OVER_PI * res.value
    return out


def _limit_cdf_many(law: LimitLaw, a: np.ndarray, cfg: QuadratureConfig = DEFAULT_CONFIG) -> np.ndarray:
    """:func:`limit_law_cdf` over an array of points.

    Inside the samplers' root finding the panel count matters, so instead
    of the rational half-line map this uses ``y = tan th`` for ``c <= 1``
    and the factored Gaussian form ``y = v/sqrt(c)`` for ``c > 1``.
    """
    a = np.asarray(a, dtype=float)
    out = np.where(a > 0.0, 1.0, 0.0)
    c_all = 0.5 * law.mu * law.mu * a
    small = (a > 0.0) & (c_all <= 1.0)
    large = (c_all > 1.0) & (c_all <= 745.0)
    c = c_all[small]
    if c.size:
        def f(th, rows):
            ct = np.cos(th)
            return np.exp(-c[rows][:, None] / (ct * ct))

        res = integrate_batch(f, np.zeros_like(c), np.full_like(c, 0.5 * math.pi), cfg)
        if not np.all(res.converged):
            raise ConvergenceError("batched limit-law quadrature did not converge")
        out[small] = 1.0 - _TWO_OVER_PI * res.value
    cl = c_all[large]
    if cl.size:
        def g(v, rows):
            return np.exp(-v * v) / (1.0 + v * v / cl[rows][:, None])

        # exp(-v^2) < 1e-18 past v = 6.5, far below any tolerance on G
        res = integrate_batch(g, np.zeros_like(cl), np.full_like(cl, 6.5), cfg)
        if not np.all(res.converged):
            raise ConvergenceError("batched limit-law quadrature did not converge")
        out[large] = 1.0 - _TWO_OVER_PI * np.exp(-cl) * res.value / np.sqrt(cl)
    return out
