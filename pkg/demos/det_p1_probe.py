"""Preemptive single-cell system with deterministic service.

Preemption plus fixed service times is the one corner of the model
where things get strange: the transform is the explicit rational
function 1 / (m s e^s + 1) with m = e^rho / rho, the density has a jump
at t = 1, and the mean age e^rho / rho blows up in BOTH limits, so
there is an optimal arrival rate (rho = 1).  The moments also stop
behaving like those of a near-exponential law once m approaches e.
"""

import math

from aoiq.analytic import det_p1_moment, det_p1_transform, q_polynomial
from aoiq.experiments import monotonicity_probe
from aoiq.invert import det_p1_ccdf, det_p1_density_moments

print("mean age e^rho / rho (minimized at rho = 1):")
for rho in (0.25, 0.5, 1.0, 2.0, 4.0):
    print(f"  rho = {rho:4}: mean = {det_p1_moment(rho, 1):10.4f}")

print("\ndensity jump at t = 1 (ccdf drop across the service time):")
for rho in (0.5, 1.0, 2.0):
    drop = det_p1_ccdf(rho, 0.98) - det_p1_ccdf(rho, 1.02)
    print(f"  rho = {rho}: ccdf(0.98) - ccdf(1.02) = {drop:.4f}")

print("\nmoments from the polynomial formula vs numerical inversion (rho = 1):")
numeric = det_p1_density_moments(1.0, pmax=2)
print(f"  total mass : inversion {numeric[0]:.6f} (exact 1)")
for p in (1, 2):
    print(f"  E[age^{p}]   : formula {det_p1_moment(1.0, p):.6f}, "
          f"inversion {numeric[p]:.6f}")

print("\nhow fast moments grow: E[age^p] / (p! m^p) at rho = 1 (m = e):")
m = math.e
for p in (2, 4, 8, 12):
    ratio = det_p1_moment(1.0, p) / (math.factorial(p) * m ** p)
    print(f"  p = {p:2d}: ratio = {ratio:.3e}")
print("The ratio collapses because m = e puts a double pole at s = -1;")
print("the moments grow like (p + 1)! there, not like p! m^p.")

print("\ncurvature of the transform near s = 0 flips sign at m = 1:")
for m in (0.5, 1.0, 3.0):
    rep = monotonicity_probe(m)
    print(f"  m = {m}: second derivative is {rep['verdict']}")
