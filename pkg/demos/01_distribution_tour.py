"""A tour of the last-zero distribution.

B(s) + mu*s starts at 0; T is its last visit to 0 before time t. Without
drift T follows the arcsine law. A drift pushes the path away from 0, so
the last zero moves towards the origin. This script prints the distribution
function, density and moments for a few drifts and compares the almost
driftless case with the arcsine law.
"""

import math

from lastzero import (
    CrossingWindow,
    DriftedBMParams,
    crossing_probability,
    last_zero_cdf,
    last_zero_mean,
    last_zero_pdf,
    last_zero_variance,
)

t = 1.0
grid = [0.05, 0.1, 0.3, 0.5, 0.7, 0.9]

print("P(T <= a) for t = 1")
print("a      " + "".join(f"mu={mu:<9g}" for mu in (1e-6, 0.5, 1.0, 3.0)) + "arcsine")
for a in grid:
    row = [last_zero_cdf(DriftedBMParams(mu, t), a) for mu in (1e-6, 0.5, 1.0, 3.0)]
    arcsine = 2 / math.pi * math.asin(math.sqrt(a / t))
    print(f"{a:<6g} " + "".join(f"{v:<12.6f}" for v in row) + f"{arcsine:.6f}")

print("\nDensity of T for mu = 1 (infinite at both ends of [0, t]):")
p = DriftedBMParams(1.0, t)
for a in grid:
    print(f"  f({a:g}) = {last_zero_pdf(p, a):.6f}")

print("\nMoments: the mean shrinks like 1/mu^2 once mu^2 t is large.")
for mu in (1e-6, 0.5, 1.0, 3.0, 10.0):
    p = DriftedBMParams(mu, t)
    print(f"  mu={mu:<6g} E[T]={last_zero_mean(p):.6f}  Var[T]={last_zero_variance(p):.3e}  "
          f"1/mu^2={1 / mu ** 2 if mu > 1e-3 else math.inf:.4g}")

print("\nProbability of at least one zero inside [0.5, 1]:")
for mu in (1e-6, 0.5, 1.0, 2.0):
    print(f"  mu={mu:<6g} {crossing_probability(mu, CrossingWindow(0.5, 1.0)):.6f}")
