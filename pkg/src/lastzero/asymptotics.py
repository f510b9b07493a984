"""Convergence scans for the large- and moderate-deviation limits.

Each scan walks a geometric grid of ``r`` values, evaluates a
log-probability through the log-domain routines of
:mod:`lastzero.distribution`, divides by the speed and records the distance
to the theoretical limit. Nothing here ever exponentiates a raw
log-probability, so the tables stay finite for ``r`` far beyond the
underflow point of the probabilities themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .distribution import (
    CrossingWindow,
    DriftedBMParams,
    crossing_log_probability,
    last_zero_log_survival,
)
from .quadrature import DEFAULT_CONFIG, QuadratureConfig

__all__ = [
    "ModerateScale",
    "RGrid",
    "ScanRow",
    "ScanTable",
    "ldp_scan",
    "md_scan",
    "crossing_scan",
    "extrapolate_limit",
    "aitken",
]

_AITKEN_FLOOR = 1e-14


@dataclass(frozen=True)
class ModerateScale:
    """Power-law scaling ``gamma_r = r**-beta`` with ``0 < beta < 1``."""

    beta: float

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")

    def gamma(self, r: float) -> float:
        return r ** (-self.beta)

    def speed(self, r: float) -> float:
        return r ** self.beta


@dataclass(frozen=True)
class RGrid:
    r_min: float = 10.0
    r_max: float = 1e4
    points: int = 12

    def __post_init__(self):
        if not (self.r_min > 0 and self.r_max > self.r_min and math.isfinite(self.r_max)):
            raise ValueError(f"grid needs 0 < r_min < r_max, got {self.r_min}, {self.r_max}")
        if int(self.points) != self.points or self.points < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.points}")

    def values(self) -> np.ndarray:
        return np.geomspace(self.r_min, self.r_max, int(self.points))


@dataclass(frozen=True)
class ScanRow:
    r: float
    raw_log: float
    scaled: float
    theory: float
    abs_err: float
    # second limit, only filled by crossing_scan
    scaled_2: Optional[float] = None
    theory_2: Optional[float] = None
    abs_err_2: Optional[float] = None
    # md_scan rows with z/(r gamma_r) outside [0, t)
    skipped: bool = False


@dataclass
class ScanTable:
    rows: list
    extrapolated: float
    meta: dict = field(default_factory=dict)
    extrapolated_2: Optional[float] = None

    def active_rows(self):
        return [row for row in self.rows if not row.skipped]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.active_rows()], dtype=float)


def aitken(values: Sequence[float]) -> float:
    """Aitken's delta-squared estimate from the last three values.

    Falls back to the last value when the second difference is below 1e-14.
    """
    if len(values) < 3:
        raise ValueError("Aitken extrapolation needs at least 3 values")
    x0, x1, x2 = (float(v) for v in values[-3:])
    d1 = x2 - x1
    d2 = d1 - (x1 - x0)
    if abs(d2) < _AITKEN_FLOOR:
        return x2
    return x2 - d1 * d1 / d2


def _aitken_sequence(values):
    out = []
    for k in range(2, len(values)):
        out.append(aitken(values[k - 2:k + 1]))
    return out


def extrapolate_limit(rows: Union[ScanTable, Sequence], order: int = 1,
                      column: str = "scaled") -> float:
    """Extrapolate the limit of a scan column with Aitken's delta-squared.

    ``rows`` is a :class:`ScanTable`, a list of :class:`ScanRow` or a plain
    sequence of numbers. ``order`` applies the transform repeatedly: order 1
    uses the last three values, order 2 the last five (the transform of the
    transformed sequence). If there are too few values for the requested
    order, the highest feasible order is used.
    """
    if isinstance(rows, ScanTable):
        rows = rows.active_rows()
    values = [getattr(row, column) if isinstance(row, ScanRow) else row for row in rows]
    values = [float(v) for v in values]
    if len(values) < 3:
        raise ValueError("need at least 3 rows to extrapolate")
    order = max(1, min(int(order), (len(values) - 1) // 2))
    seq = values[-(2 * order + 1):]
    for _ in range(order - 1):
        seq = _aitken_sequence(seq)
    return aitken(seq)


def _row(r, raw_log, speed, theory):
    scaled = raw_log / float(speed)
    return ScanRow(r=float(r), raw_log=raw_log, scaled=scaled, theory=theory,
                   abs_err=abs(scaled - theory))


def ldp_scan(mu: float, t: float, z: float, grid: RGrid = RGrid(),
             cfg: QuadratureConfig = DEFAULT_CONFIG) -> ScanTable:
    """Scan ``(1/r) log P(T_{mu sqrt(r), t} >= z)`` towards ``-mu^2 z / 2``.

    For ``z = t`` the event ``{T >= t}`` has probability zero, so the
    shrinking neighbourhood ``{T >= t r/(r+1)}`` is used instead; its
    log-probability over ``r`` has the same limit ``-mu^2 t / 2``.
    """
    if not 0.0 < z <= t:
        raise ValueError(f"z must lie in (0, t={t}], got {z}")
    theory = -0.5 * mu * mu * z
    rows = []
    for r in grid.values():
        p = DriftedBMParams.scaled(mu, r, t)
        z_eval = z if z < t else t * r / (r + 1.0)
        rows.append(_row(r, last_zero_log_survival(p, z_eval, cfg), r, theory))
    meta = {"scan": "ldp", "mu": mu, "t": t, "z": z, "r_min": grid.r_min,
            "r_max": grid.r_max, "r_points": grid.points, "speed": "r"}
    table = ScanTable(rows, math.nan, meta)
    if len(rows) >= 3:
        table.extrapolated = extrapolate_limit(table)
    return table


def md_scan(mu: float, t: float, z: float, scale: ModerateScale, grid: RGrid = RGrid(),
            cfg: QuadratureConfig = DEFAULT_CONFIG) -> ScanTable:
    """Scan ``gamma_r log P(r gamma_r T_{mu sqrt(r), t} >= z)`` towards ``-mu^2 z / 2``.

    Rows where ``z/(r gamma_r)`` is not inside ``[0, t)`` are kept but
    marked ``skipped``. The extrapolated value applies delta-squared twice
    (last five rows): the correction here behaves like
    ``gamma_r log gamma_r``, which a single pass leaves visibly biased for
    small ``beta``.
    """
    if not z > 0.0:
        raise ValueError(f"z must be positive, got {z}")
    theory = -0.5 * mu * mu * z
    rows = []
    for r in grid.values():
        gamma = scale.gamma(r)
        z_eval = z / (r * gamma)
        if not z_eval < t:
            rows.append(ScanRow(float(r), math.nan, math.nan, theory, math.nan, skipped=True))
            continue
        p = DriftedBMParams.scaled(mu, r, t)
        rows.append(_row(r, last_zero_log_survival(p, z_eval, cfg), 1.0 / gamma, theory))
    meta = {"scan": "md", "mu": mu, "t": t, "z": z, "beta": scale.beta,
            "r_min": grid.r_min, "r_max": grid.r_max, "r_points": grid.points,
            "speed": "r**beta"}
    table = ScanTable(rows, math.nan, meta)
    active = table.active_rows()
    if not active:
        raise ValueError("no grid point satisfies z/(r gamma_r) < t; raise r_min or r_max")
    if len(active) >= 3:
        table.extrapolated = extrapolate_limit(table, order=2)
    return table


def crossing_scan(mu: float, w: CrossingWindow, grid: RGrid = RGrid(),
                  cfg: QuadratureConfig = DEFAULT_CONFIG) -> ScanTable:
    """Scan both crossing-probability limits along ``mu sqrt(r)``.

    Column 1: ``(1/r) log Psi -> -mu^2 a / 2``.
    Column 2: ``exp(mu^2 r a/2) sqrt(r) Psi -> sqrt(2/(pi mu^2 a))``, with the
    exponent assembled in log space before the single exponentiation.
    """
    theory_1 = -0.5 * mu * mu * w.a
    theory_2 = math.sqrt(2.0 / (math.pi * mu * mu * w.a))
    rows = []
    for r in grid.values():
        raw = crossing_log_probability(mu * math.sqrt(r), w, cfg)
        scaled_2 = math.exp(raw + 0.5 * mu * mu * r * w.a + 0.5 * math.log(r))
        row = _row(r, raw, r, theory_1)
        rows.append(ScanRow(row.r, row.raw_log, row.scaled, row.theory, row.abs_err,
                            scaled_2=scaled_2, theory_2=theory_2,
                            abs_err_2=abs(scaled_2 - theory_2)))
    meta = {"scan": "crossing", "mu": mu, "a": w.a, "b": w.b, "r_min": grid.r_min,
            "r_max": grid.r_max, "r_points": grid.points, "speed": "r"}
    table = ScanTable(rows, math.nan, meta)
    if len(rows) >= 3:
        table.extrapolated = extrapolate_limit(table)
        table.extrapolated_2 = extrapolate_limit(table, column="scaled_2")
    return table
