"""Last zero crossing of Brownian motion with drift.

Closed-form distribution of the last zero ``T_{mu,t}`` of ``B(s) + mu*s`` on
``[0, t]``, its rescaled limit law, exact samplers, a Monte Carlo oracle and
convergence scans for the large- and moderate-deviation limits.
"""

__version__ = "0.1.0"

from .errors import ConvergenceError, NumericalDomainError
from .quadrature import (
    DEFAULT_CONFIG,
    IntegralResult,
    QuadratureConfig,
    integrate,
    integrate_batch,
    integrate_semi_infinite,
    normal_pdf,
)
from .distribution import (
    CrossingWindow,
    DriftedBMParams,
    LimitLaw,
    RateFunctionJ,
    RateFunctionJTilde,
    crossing_log_probability,
    crossing_probability,
    last_zero_cdf,
    last_zero_log_survival,
    last_zero_mean,
    last_zero_pdf,
    last_zero_variance,
    limit_law_cdf,
    limit_law_mean,
    limit_law_variance,
    rate_J,
    rate_J_tilde,
)
from .sampling import (
    RngSeed,
    RootFindConfig,
    limit_law_quantile,
    quantile,
    sample_last_zero,
    sample_limit_law,
)
from .montecarlo import (
    MCEstimate,
    McConfig,
    bridge_cross_prob,
    estimate_crossing,
    estimate_last_zero_cdf,
    simulate_last_zero,
)
from .asymptotics import (
    ModerateScale,
    RGrid,
    ScanTable,
    crossing_scan,
    extrapolate_limit,
    ldp_scan,
    md_scan,
)
