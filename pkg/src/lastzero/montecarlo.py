"""Monte Carlo oracle for the last zero and for window crossings.

Paths are Euler walks ``x_{k+1} = x_k + mu dt + sqrt(dt) N(0, 1)`` from
``x_0 = 0``. Interval ``k`` covers ``[k dt, (k+1) dt]`` and registers a zero
when its endpoint signs differ. With the bridge correction on, an interval
without a sign change also registers with probability
``exp(-2 x_k x_{k+1} / dt)``, the chance that a Brownian bridge between the
two endpoints touches zero.

Draw order
----------
Paths are processed in blocks of :data:`PATH_BLOCK`; block ``j`` owns the
Philox counter range of :func:`lastzero.sampling.block_generator`. Inside a
block all Gaussian increments are drawn first (path-major). Bridge uniforms
follow, path by path, one per candidate interval, scanning backward in
time. Candidates are intervals with ``0 < x_k x_{k+1} < 40 dt`` that are
later than the last sign change (for the last-zero estimate) or inside the
window (for crossings, only on paths without a sign change there). Beyond
``40 dt`` the bridge probability is below ``e^-80`` and no uniform is spent.

For crossings the walk before ``a`` is never inspected, so each path starts
from an exact Gaussian draw of its position at the first window node (one
normal per path, drawn before the increments) and only the window is
simulated.

Blocks are whole ``(PATH_BLOCK, n_steps)`` matrices rather than single
paths; memory stays at a few megabytes per worker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .distribution import CrossingWindow, DriftedBMParams, _check_mu
from .sampling import RngSeed, block_generator, map_blocks

__all__ = [
    "McConfig",
    "MCEstimate",
    "PATH_BLOCK",
    "bridge_cross_prob",
    "simulate_last_zero",
    "simulate_paths",
    "estimate_last_zero_cdf",
    "estimate_crossing",
]

PATH_BLOCK = 128
# bridge probabilities below exp(-80) are treated as zero
_BRIDGE_CUTOFF = 40.0


@dataclass(frozen=True)
class McConfig:
    n_paths: int
    dt: float
    seed: RngSeed = RngSeed()
    bridge_correction: bool = True

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 100:
            raise ValueError(f"n_paths must be an integer >= 100, got {self.n_paths}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "n_paths", int(self.n_paths))

    def steps(self, horizon: float) -> int:
        """Number of Euler steps covering ``[0, horizon]``."""
        if self.dt > horizon / 10.0 * (1.0 + 1e-12):
            raise ValueError(f"dt must be <= horizon/10 = {horizon / 10.0}, got {self.dt}")
        return max(10, int(round(horizon / self.dt)))


class MCEstimate(NamedTuple):
    p_hat: float
    stderr: float
    n: int

    @classmethod
    def from_count(cls, hits: int, n: int) -> "MCEstimate":
        p = hits / n
        return cls(p, math.sqrt(p * (1.0 - p) / n), n)


def bridge_cross_prob(x0, x1, dt: float):
    """Probability that a unit-variance Brownian bridge from ``x0`` to ``x1`` over ``dt`` hits zero."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    prod = np.asarray(x0, dtype=float) * np.asarray(x1, dtype=float)
    out = np.where(prod <= 0, 1.0, np.exp(-2.0 * np.maximum(prod, 0.0) / dt))
    return float(out) if out.ndim == 0 else out


def _block_sizes(n_paths):
    n_blocks = -(-n_paths // PATH_BLOCK)
    return n_blocks, [min(PATH_BLOCK, n_paths - j * PATH_BLOCK) for j in range(n_blocks)]


def _walk(gen, m, n, mu, dt):
    """Positions ``x_0..x_n`` of ``m`` paths, shape ``(m, n+1)``."""
    x = np.empty((m, n + 1))
    x[:, 0] = 0.0
    steps = gen.standard_normal((m, n))
    steps *= math.sqrt(dt)
    steps += mu * dt
    np.cumsum(steps, axis=1, out=x[:, 1:])
    return x


def _bridge_hits(gen, prod, cand, dt):
    """Draw the bridge uniforms for ``cand`` (backward in time per path).

    Returns (path index, interval index) of every registering candidate.
    """
    rev = cand[:, ::-1]
    rows, cols_rev = np.nonzero(rev)
    if rows.size == 0:
        return rows, cols_rev
    n = prod.shape[1]
    cols = n - 1 - cols_rev
    u = gen.random(rows.size)
    hit = u < np.exp(-2.0 * prod[rows, cols] / dt)
    return rows[hit], cols[hit]


def _last_zero_block(p, cfg, n, j, m):
    gen = block_generator(cfg.seed, j)
    dt = p.t / n
    x = _walk(gen, m, n, p.mu, dt)
    prod = x[:, :-1] * x[:, 1:]
    change = prod <= 0.0
    # interval 0 always registers because x_0 = 0
    last = n - 1 - np.argmax(change[:, ::-1], axis=1)
    if cfg.bridge_correction:
        cand = (~change) & (prod < _BRIDGE_CUTOFF * dt)
        cand &= np.arange(n)[None, :] > last[:, None]
        rows, cols = _bridge_hits(gen, prod, cand, dt)
        np.maximum.at(last, rows, cols)
    return np.where(last == 0, 0.0, (last + 0.5) * dt)


def simulate_last_zero(p: DriftedBMParams, cfg: McConfig,
                       workers: Optional[int] = None) -> np.ndarray:
    """Simulated last-zero times of ``cfg.n_paths`` paths on ``[0, p.t]``.

    Each time is the midpoint of the last registering interval, or 0 when
    only the first interval (which starts at the origin) registers.
    """
    n = cfg.steps(p.t)
    n_blocks, sizes = _block_sizes(cfg.n_paths)
    parts = map_blocks(lambda j: _last_zero_block(p, cfg, n, j, sizes[j]), n_blocks, workers)
    return np.concatenate(parts)


def simulate_paths(p: DriftedBMParams, cfg: McConfig, block: int = 0) -> np.ndarray:
    """Debug view: the full position matrix of one path block, shape ``(m, n_steps+1)``.

    Uses the same draws as :func:`simulate_last_zero` for that block.
    """
    n = cfg.steps(p.t)
    n_blocks, sizes = _block_sizes(cfg.n_paths)
    if not 0 <= block < n_blocks:
        raise ValueError(f"block must lie in [0, {n_blocks}), got {block}")
    return _walk(block_generator(cfg.seed, block), sizes[block], n, p.mu, p.t / n)


def estimate_last_zero_cdf(p: DriftedBMParams, a: float, cfg: McConfig,
                           workers: Optional[int] = None) -> MCEstimate:
    """Fraction of simulated last zeros at or before ``a``."""
    if not 0.0 <= a <= p.t:
        raise ValueError(f"a must lie in [0, t={p.t}], got {a}")
    times = simulate_last_zero(p, cfg, workers)
    return MCEstimate.from_count(int(np.count_nonzero(times <= a)), cfg.n_paths)


def _crossing_block(mu, lo_k, hi_k, cfg, dt, j, m):
    gen = block_generator(cfg.seed, j)
    # the walk at time lo_k*dt is exactly N(mu s, s); start the window there
    s = lo_k * dt
    start = mu * s + math.sqrt(s) * gen.standard_normal(m)
    x = _walk(gen, m, hi_k - lo_k, mu, dt)
    x += start[:, None]
    prod = x[:, :-1] * x[:, 1:]
    change = prod <= 0.0
    hit = change.any(axis=1)
    if cfg.bridge_correction:
        cand = (~hit[:, None]) & (prod < _BRIDGE_CUTOFF * dt)
        rows, _ = _bridge_hits(gen, prod, cand, dt)
        hit[rows] = True
    return int(np.count_nonzero(hit))


def estimate_crossing(mu: float, w: CrossingWindow, cfg: McConfig,
                      horizon: Optional[float] = None,
                      workers: Optional[int] = None) -> MCEstimate:
    """Fraction of paths with at least one registered zero inside ``[a, b]``.

    Only intervals lying entirely in ``[a, b]`` are inspected. ``horizon``
    (default ``b``) fixes the grid ``dt = horizon / round(horizon / cfg.dt)``;
    nothing after ``b`` is simulated since it cannot affect the event.
    """
    _check_mu(mu)
    horizon = w.b if horizon is None else float(horizon)
    if horizon < w.b:
        raise ValueError(f"horizon must be >= b={w.b}, got {horizon}")
    n = cfg.steps(horizon)
    dt = horizon / n
    lo_k = math.ceil(w.a / dt - 1e-9)
    hi_k = min(n, math.floor(w.b / dt + 1e-9))
    if hi_k <= lo_k:
        raise ValueError(f"window [{w.a}, {w.b}] is shorter than one step dt={dt}")
    n_blocks, sizes = _block_sizes(cfg.n_paths)
    counts = map_blocks(lambda j: _crossing_block(mu, lo_k, hi_k, cfg, dt, j, sizes[j]),
                        n_blocks, workers)
    return MCEstimate.from_count(sum(counts), cfg.n_paths)
