"""Inverse-transform samplers for ``T_{mu,t}`` and the limit law ``Y``.

Random numbers
--------------
All randomness comes from NumPy's counter-based ``Philox4x64`` generator.
An :class:`RngSeed` ``(seed, stream_id)`` fixes the 128-bit Philox key,
and block ``j`` of a computation starts at counter ``j << 64``. Blocks have
a fixed size, so variate ``i`` depends only on ``(seed, stream_id, i)``.
Results therefore do not depend on how blocks are spread over threads.
Distinct ``stream_id`` values give independent streams.

Root finding
------------
Each quantile is bracketed and then refined with Illinois-modified secant
steps, with a plain bisection step every fourth iteration. For ``T`` the
bracket comes from a cached table of CDF values on arcsine-spaced nodes.
For ``Y`` the upper end of the bracket is doubled until ``G`` passes the
target.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .distribution import (
    DriftedBMParams,
    LimitLaw,
    _cdf_many,
    _limit_cdf_many,
    last_zero_cdf,
    limit_law_cdf,
)
from .errors import ConvergenceError
from .quadrature import DEFAULT_CONFIG, QuadratureConfig

__all__ = [
    "RngSeed",
    "RootFindConfig",
    "block_generator",
    "worker_count",
    "map_blocks",
    "quantile",
    "limit_law_quantile",
    "sample_last_zero",
    "sample_limit_law",
]

SAMPLE_BLOCK = 1 << 16
_TABLE_NODES = 16384
_U64 = 1 << 64


@dataclass(frozen=True)
class RngSeed:
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= v < _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def key(self) -> int:
        return self.seed | (self.stream_id << 64)


def block_generator(seed: RngSeed, block: int) -> np.random.Generator:
    """Generator for block ``block`` of the stream ``seed``."""
    return np.random.Generator(np.random.Philox(key=seed.key, counter=int(block) << 64))


def worker_count(workers: Optional[int] = None) -> int:
    """Resolve a worker count; ``None`` reads ``LASTZERO_THREADS`` (0 or unset = all cores)."""
    if workers is None:
        try:
            workers = int(os.environ.get("LASTZERO_THREADS", "0"))
        except ValueError:
            workers = 0
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def map_blocks(fn: Callable[[int], object], n_blocks: int, workers: Optional[int] = None) -> list:
    """``[fn(0), ..., fn(n_blocks-1)]``, computed on up to ``workers`` threads."""
    workers = min(worker_count(workers), n_blocks)
    if workers <= 1:
        return [fn(j) for j in range(n_blocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_blocks)))


@dataclass(frozen=True)
class RootFindConfig:
    """Stopping rule: ``|F(x) - prob| <= p_tol`` or bracket width ``<= x_tol``.

    ``x_tol=None`` means ``1e-10`` times the natural scale of the problem
    (the horizon ``t`` for ``T``, the mean ``1/mu^2`` for ``Y``).
    """

    x_tol: Optional[float] = None
    p_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if self.x_tol is not None and not self.x_tol > 0:
            raise ValueError(f"x_tol must be positive, got {self.x_tol}")
        if not self.p_tol > 0:
            raise ValueError(f"p_tol must be positive, got {self.p_tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")

    def resolved_x_tol(self, scale: float) -> float:
        return 1e-10 * scale if self.x_tol is None else self.x_tol


def _solve(cdf: Callable, u, lo, hi, flo, fhi, x_tol, cfg: RootFindConfig):
    """Vectorised Illinois iteration for ``cdf(x) = u`` inside ``[lo, hi]``.

    ``flo``/``fhi`` are ``cdf - u`` at the bracket ends (``flo <= 0 <= fhi``).
    """
    u = np.asarray(u, dtype=float)
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    flo, fhi = np.array(flo, dtype=float), np.array(fhi, dtype=float)
    x = 0.5 * (lo + hi)
    done = np.zeros(u.shape, dtype=bool)
    hit_lo = np.abs(flo) <= cfg.p_tol
    hit_hi = ~hit_lo & (np.abs(fhi) <= cfg.p_tol)
    x[hit_lo], x[hit_hi] = lo[hit_lo], hi[hit_hi]
    done |= hit_lo | hit_hi
    narrow = ~done & (hi - lo <= x_tol)
    done |= narrow
    # -1: lo was replaced last, +1: hi was replaced last
    last = np.zeros(u.shape, dtype=np.int8)
    for it in range(int(cfg.max_iter)):
        act = np.flatnonzero(~done)
        if act.size == 0:
            return x
        a, b, fa, fb = lo[act], hi[act], flo[act], fhi[act]
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = a - fa * (b - a) / (fb - fa)
        mid = 0.5 * (a + b)
        bad = ~((xs > a) & (xs < b)) | (it % 4 == 3)
        xs = np.where(bad, mid, xs)
        fx = cdf(xs) - u[act]
        x[act] = xs
        hit = np.abs(fx) <= cfg.p_tol
        left = (fx < 0) & ~hit
        right = (fx > 0) & ~hit
        # Illinois: halve the stale end when the same side moves twice in a row
        stale_hi = left & (last[act] == -1)
        stale_lo = right & (last[act] == 1)
        fb = np.where(stale_hi, 0.5 * fb, fb)
        fa = np.where(stale_lo, 0.5 * fa, fa)
        a = np.where(left, xs, a)
        fa = np.where(left, fx, fa)
        b = np.where(right, xs, b)
        fb = np.where(right, fx, fb)
        lo[act], hi[act], flo[act], fhi[act] = a, b, fa, fb
        last[act] = np.where(left, -1, np.where(right, 1, 0))
        narrow = ~hit & (b - a <= x_tol)
        x[act[narrow]] = 0.5 * (a[narrow] + b[narrow])
        done[act[hit | narrow]] = True
    if not np.all(done):
        raise ConvergenceError(
            f"root finding did not converge in {cfg.max_iter} iterations for "
            f"{int(np.count_nonzero(~done))} target(s)")
    return x


def quantile(p: DriftedBMParams, prob: float, cfg: RootFindConfig = RootFindConfig(),
             quad: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Inverse of :func:`~lastzero.distribution.last_zero_cdf`."""
    prob = float(prob)
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"prob must lie in [0, 1], got {prob}")
    if prob == 0.0:
        return 0.0
    if prob == 1.0:
        return p.t

    def cdf(a):
        return np.array([last_zero_cdf(p, x, quad) for x in np.atleast_1d(a)])

    u = np.array([prob])
    x = _solve(cdf, u, [0.0], [p.t], -u, 1.0 - u, cfg.resolved_x_tol(p.t), cfg)
    return float(x[0])


def limit_law_quantile(law: LimitLaw, prob: float, cfg: RootFindConfig = RootFindConfig(),
                       quad: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Inverse of :func:`~lastzero.distribution.limit_law_cdf`; ``inf`` at ``prob=1``."""
    prob = float(prob)
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"prob must lie in [0, 1], got {prob}")
    if prob == 0.0:
        return 0.0
    if prob == 1.0:
        return math.inf

    def cdf(a):
        return np.array([limit_law_cdf(law, x, quad) for x in np.atleast_1d(a)])

    return float(_invert_limit(cdf, np.array([prob]), law, cfg)[0])


def _invert_limit(cdf, u, law, cfg, lo=None, hi=None, g_lo=None, g_hi=None):
    """Solve ``G(a) = u``; brackets not supplied start at ``[0, 1/mu^2]``."""
    scale = 1.0 / law.mu ** 2
    if lo is None:
        lo, g_lo = np.zeros_like(u), np.zeros_like(u)
        hi = np.full_like(u, scale)
        g_hi = cdf(hi)
    lo, hi = lo.copy(), hi.copy()
    g_lo, g_hi = g_lo.copy(), g_hi.copy()
    for _ in range(int(cfg.max_iter)):
        short = np.flatnonzero(g_hi < u)
        if short.size == 0:
            break
        lo[short], g_lo[short] = hi[short], g_hi[short]
        hi[short] *= 2.0
        g_hi[short] = cdf(hi[short])
    else:
        raise ConvergenceError("could not bracket the limit-law quantile")
    return _solve(cdf, u, lo, hi, g_lo - u, g_hi - u, cfg.resolved_x_tol(scale), cfg)


@lru_cache(maxsize=32)
def _limit_table(mu: float, quad: QuadratureConfig):
    # G(a) = erf-like in c = mu^2 a/2 and behaves like sqrt(c) at 0: quadratic spacing.
    # 64 is far enough out that G rounds to 1.
    c = 64.0 * (np.arange(_TABLE_NODES + 1) / _TABLE_NODES) ** 2
    nodes = 2.0 * c / mu ** 2
    values = np.maximum.accumulate(_limit_cdf_many(LimitLaw(mu), nodes, quad))
    nodes.setflags(write=False)
    values.setflags(write=False)
    return nodes, values


@lru_cache(maxsize=32)
def _cdf_table(mu: float, t: float, quad: QuadratureConfig):
    nodes = t * np.sin(0.5 * np.pi * np.arange(_TABLE_NODES + 1) / _TABLE_NODES) ** 2
    nodes[0], nodes[-1] = 0.0, t
    values = _cdf_many(DriftedBMParams(mu, t), nodes, quad)
    # round-off must not break the ordering used by searchsorted
    values = np.maximum.accumulate(values)
    nodes.setflags(write=False)
    values.setflags(write=False)
    return nodes, values


def _blocks(n):
    return [(j, min(SAMPLE_BLOCK, n - j * SAMPLE_BLOCK)) for j in range(-(-n // SAMPLE_BLOCK))]


def sample_last_zero(p: DriftedBMParams, n: int, seed: RngSeed = RngSeed(),
                     cfg: RootFindConfig = RootFindConfig(),
                     quad: QuadratureConfig = DEFAULT_CONFIG,
                     workers: Optional[int] = None) -> np.ndarray:
    """``n`` independent draws of ``T_{mu,t}`` by inverse transform."""
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    nodes, values = _cdf_table(p.mu, p.t, quad)
    x_tol = cfg.resolved_x_tol(p.t)

    def cdf(a):
        return _cdf_many(p, a, quad)

    def run(block):
        j, size = block
        u = block_generator(seed, j).random(size)
        k = np.clip(np.searchsorted(values, u, side="right"), 1, _TABLE_NODES)
        lo, hi = nodes[k - 1], nodes[k]
        return _solve(cdf, u, lo, hi, values[k - 1] - u, values[k] - u, x_tol, cfg)

    blocks = _blocks(n)
    return np.concatenate(map_blocks(lambda i: run(blocks[i]), len(blocks), workers))


def sample_limit_law(law: LimitLaw, n: int, seed: RngSeed = RngSeed(),
                     cfg: RootFindConfig = RootFindConfig(),
                     quad: QuadratureConfig = DEFAULT_CONFIG,
                     workers: Optional[int] = None) -> np.ndarray:
    """``n`` independent draws of the limit law ``Y`` by inverse transform."""
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")

    def cdf(a):
        return _limit_cdf_many(law, a, quad)

    nodes, values = _limit_table(law.mu, quad)

    def run(block):
        j, size = block
        u = block_generator(seed, j).random(size)
        k = np.searchsorted(values, u, side="right")
        # targets beyond the table start doubling from its last node
        k = np.clip(k, 1, _TABLE_NODES + 1)
        past = k > _TABLE_NODES
        k = np.minimum(k, _TABLE_NODES)
        lo, hi = nodes[k - 1].copy(), nodes[k].copy()
        g_lo, g_hi = values[k - 1].copy(), values[k].copy()
        lo[past], g_lo[past] = nodes[-1], values[-1]
        return _invert_limit(cdf, u, law, cfg, lo, hi, g_lo, g_hi)

    blocks = _blocks(n)
    return np.concatenate(map_blocks(lambda i: run(blocks[i]), len(blocks), workers))
