"""What survives as the arrival rate blows up.

With the service rate pinned at mu = 1, letting rho -> infinity makes
each delivered message the freshest possible one, and the AoI law
collapses to an explicit limit: service plus stationary excess for the
push-out systems, n services plus excess for the n-cell blocking chain.
The finite-rho transforms at rho = 100 are compared against the limit,
and a simulation at the same rho is thrown in as a third witness.
"""

import numpy as np

from aoiq import ServiceDistribution, TrafficModel
from aoiq.analytic import B1, B2, P2, aoi_mean, aoi_variance, high_traffic_moments
from aoiq.experiments import high_traffic_check

for label, dist in [("exponential", ServiceDistribution.exponential(1.0)),
                    ("deterministic", ServiceDistribution.deterministic(1.0))]:
    print(f"{label} service, rho = 100 vs the rho -> infinity limit")
    tr = TrafficModel(100.0, dist)
    print(f"  {'policy':>6} {'mean(100)':>10} {'mean(inf)':>10} "
          f"{'var(100)':>10} {'var(inf)':>10}")
    for pol in (B1, B2, P2):
        m_lim, v_lim = high_traffic_moments(pol, dist)
        print(f"  {str(pol):>6} {aoi_mean(pol, tr):10.4f} {m_lim:10.4f} "
              f"{aoi_variance(pol, tr):10.4f} {v_lim:10.4f}")
    print()

print("simulation against the limiting CCDF (B2, exponential, rho = 100)")
rep = high_traffic_check(B2, ServiceDistribution.exponential(1.0),
                         rho_large=100.0, segments=100_000, seed=7)
for key, val in rep.items():
    print(f"  {key}: {val}")
