"""One distribution, three independent routes.

The stationary AoI density of B2 and P2 with unit-rate exponential
service and lam = 1 is computed from (a) the closed-form density, (b)
numerical inversion of the Laplace transform, and (c) an exact
simulation tail estimate differentiated on a grid.  The three columns
should agree to the precision of each route.
"""

import numpy as np

from aoiq import (
    InversionConfig,
    ServiceDistribution,
    SimConfig,
    TrafficModel,
    aoi_lt,
    invert_density,
    run,
    time_average_ccdf,
)
from aoiq.analytic import B2, P2, closed_density_exp

tr = TrafficModel(1.0, ServiceDistribution.exponential(1.0))
cfg = InversionConfig(method="talbot")

for policy in (B2, P2):
    path, _ = run(SimConfig(policy, tr, segments=400_000, seed=11))
    print(f"\n{policy}: density f(t) at lam = mu = 1")
    print(f"{'t':>5} {'closed form':>14} {'inversion':>14} {'simulation':>14}")
    for t in (0.5, 1.0, 2.0, 4.0):
        closed = closed_density_exp(policy, 1.0, t)
        inverted = invert_density(lambda s: aoi_lt(policy, tr, s), t, cfg)
        h = 0.05
        sim = (time_average_ccdf(path, t - h, warmup=4000)
               - time_average_ccdf(path, t + h, warmup=4000)) / (2 * h)
        print(f"{t:5.1f} {closed:14.8f} {inverted:14.8f} {sim:14.8f}")

print("""
Closed form and inversion agree to ~1e-13 (Talbot on a smooth
transform); the simulated column carries Monte Carlo noise plus the
finite-difference bias of the tail derivative.""")
