"""Age-of-information analysis for small-buffer M/GI/1 message systems.

Three routes to the stationary AoI law of the blocking (B) and push-out
(P) buffer policies, cross-validating each other:

* closed-form Laplace transforms (:mod:`aoiq.analytic`),
* numerical transform inversion (:mod:`aoiq.invert`),
* exact event-driven simulation (:mod:`aoiq.sim`).

:mod:`aoiq.experiments` compares the policies (sweeps, stochastic-order
verdicts, high-traffic limits) and :mod:`aoiq.cli` exposes everything on
the command line.
"""

from .analytic import (
    B1,
    B2,
    P1,
    P2,
    PolicyId,
    TrafficModel,
    UnsupportedPolicyError,
    aoi_lt,
    aoi_mean,
    aoi_sd,
    aoi_variance,
    det_p1_moment,
    det_p1_transform,
    high_traffic_limit_lt,
    high_traffic_moments,
)
from .dist import ServiceDistribution, parse_dist
from .experiments import (
    OrderVerdict,
    SweepSpec,
    high_traffic_check,
    monotonicity_probe,
    order_check,
    sweep,
)
from .invert import (
    InversionConfig,
    InversionError,
    det_p1_ccdf,
    det_p1_density,
    invert_ccdf,
    invert_density,
)
from .sim import (
    AoiPath,
    SimConfig,
    SimStats,
    StarvationError,
    coupled_run,
    pathwise_violations,
    run,
    time_average_ccdf,
)

__version__ = "0.1.0"

__all__ = [
    "B1", "B2", "P1", "P2",
    "PolicyId", "TrafficModel", "UnsupportedPolicyError",
    "aoi_lt", "aoi_mean", "aoi_sd", "aoi_variance",
    "det_p1_moment", "det_p1_transform",
    "high_traffic_limit_lt", "high_traffic_moments",
    "ServiceDistribution", "parse_dist",
    "OrderVerdict", "SweepSpec", "high_traffic_check",
    "monotonicity_probe", "order_check", "sweep",
    "InversionConfig", "InversionError",
    "det_p1_ccdf", "det_p1_density", "invert_ccdf", "invert_density",
    "AoiPath", "SimConfig", "SimStats", "StarvationError",
    "coupled_run", "pathwise_violations", "run", "time_average_ccdf",
    "__version__",
]
