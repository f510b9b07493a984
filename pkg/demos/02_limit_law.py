"""Rescaling: r * T for drift mu*sqrt(r) settles on a fixed law Y.

With drift mu*sqrt(r) the last zero happens at times of order 1/r. Blown
up by r, its distribution converges to G(a) = erf(sqrt(mu^2 a / 2)), the
law of a chi-square(1) variable divided by mu^2. So E[Y] = 1/mu^2 and
Var[Y] = 2/mu^4. The script shows the convergence of the distribution and
of r^2 Var[T], then checks exact samples of Y.
"""

import numpy as np

from lastzero import (
    DriftedBMParams,
    LimitLaw,
    RngSeed,
    last_zero_cdf,
    last_zero_variance,
    limit_law_cdf,
    limit_law_mean,
    limit_law_variance,
    sample_limit_law,
)

mu, t = 1.0, 1.0
law = LimitLaw(mu)

print("P(r T <= a) against G(a), a = 0.5")
for r in (1, 10, 100, 1e3, 1e4):
    p = DriftedBMParams.scaled(mu, r, t)
    print(f"  r={r:<8g} {last_zero_cdf(p, 0.5 / r):.8f}   G = {limit_law_cdf(law, 0.5):.8f}")

print("\nr^2 Var[T] approaches 2/mu^4 = 2")
for r in (1, 10, 100, 1e3, 1e4):
    v = last_zero_variance(DriftedBMParams.scaled(mu, r, t))
    print(f"  r={r:<8g} {r * r * v:.12f}")

y = sample_limit_law(law, 200_000, RngSeed(1))
print(f"\n200000 exact draws of Y: mean {y.mean():.4f} (exact {limit_law_mean(law)}), "
      f"variance {y.var(ddof=1):.4f} (exact {limit_law_variance(law)})")
qs = np.quantile(y, [0.1, 0.5, 0.9])
print("empirical quantiles 10/50/90%: " + ", ".join(f"{q:.4f}" for q in qs))
print("G at those points:            " + ", ".join(f"{limit_law_cdf(law, q):.4f}" for q in qs))
