"""Policy comparison experiments: traffic sweeps, stochastic-order
verdicts, high-traffic checks, and a transform validity probe for the
deterministic-service preemptive system."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .analytic import (
    PolicyId,
    TrafficModel,
    UnsupportedPolicyError,
    aoi_lt,
    aoi_mean,
    aoi_sd,
    high_traffic_limit_lt,
    high_traffic_moments,
)
from .dist import ServiceDistribution
from .invert import InversionConfig, InversionError, invert_ccdf
from .sim import SimConfig, run, time_average_ccdf

__all__ = [
    "SweepSpec",
    "OrderVerdict",
    "sweep",
    "order_check",
    "high_traffic_check",
    "monotonicity_probe",
    "figure_preset",
    "FIGURE_PRESETS",
]


_QUANTITIES = ("mean", "sd", "ccdf")
_ENGINES = ("analytic", "simulate", "both")


@dataclass(frozen=True)
class SweepSpec:
    """One table request: quantity per (rho, policy) cell.

    The service law is held fixed and the arrival rate is set to
    rho * mu at each grid point.
    """

    policies: tuple
    dist: ServiceDistribution
    rho_grid: tuple
    quantity: str = "mean"
    engine: str = "analytic"
    t_grid: Optional[tuple] = None          # required for quantity="ccdf"
    segments: int = 200_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "policies", tuple(self.policies))
        object.__setattr__(self, "rho_grid", tuple(float(r) for r in self.rho_grid))
        if self.t_grid is not None:
            object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        if not self.policies or not self.rho_grid:
            raise ValueError("policies and rho_grid must be nonempty")
        if any(r <= 0 for r in self.rho_grid):
            raise ValueError("rho grid entries must be positive")
        if self.quantity not in _QUANTITIES:
            raise ValueError(f"unknown quantity {self.quantity!r}")
        if self.engine not in _ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.quantity == "ccdf" and not self.t_grid:
            raise ValueError("quantity='ccdf' needs a t_grid")
        if self.engine in ("simulate", "both") and self.segments <= 0:
            raise ValueError("simulation engines need a positive segment budget")


@dataclass(frozen=True)
class OrderVerdict:
    """Stochastic-order comparison of two AoI laws on a finite grid.

    relation is "a<=st b" only if ccdf_a(t) <= ccdf_b(t) + tol at every
    grid point (and symmetrically); otherwise "incomparable", in which
    case max_violation is the smaller of the two directional excesses,
    how far the better of the two orderings is from holding.
    """

    policy_a: PolicyId
    policy_b: PolicyId
    relation: str
    max_violation: float
    grid: tuple
    tol: float


def _ccdf_config(dist: ServiceDistribution) -> InversionConfig:
    # transforms with e^{-as} factors (deterministic service) put poles
    # along the contour Talbot bends into; use the Euler-summed Bromwich
    # series there and keep Talbot for the smooth exponential case
    if dist.kind == "exp":
        return InversionConfig(method="talbot")
    return InversionConfig(method="euler-summation", nodes=96)


def analytic_ccdf(policy: PolicyId, traffic: TrafficModel, t: float) -> float:
    """Tail probability P(age > t) by numerical transform inversion."""
    cfg = _ccdf_config(traffic.dist)
    return invert_ccdf(lambda s: aoi_lt(policy, traffic, s), t, cfg)


def _batch_se(path, warmup: int, batches: int = 50) -> float:
    """Standard error of the time-average age by batch means."""
    s = path.resets_s[warmup:]
    a = path.resets_age[warmup:]
    area = a[:-1] * np.diff(s) + 0.5 * np.diff(s) ** 2
    length = np.diff(s)
    nb = min(batches, len(area) // 2)
    if nb < 2:
        return math.inf
    cut = len(area) - len(area) % nb
    means = (area[:cut].reshape(nb, -1).sum(axis=1)
             / length[:cut].reshape(nb, -1).sum(axis=1))
    return float(np.std(means, ddof=1) / math.sqrt(nb))


def _analytic_cell(policy: PolicyId, traffic: TrafficModel,
                   quantity: str, t: Optional[float]):
    if quantity == "mean":
        return aoi_mean(policy, traffic)
    if quantity == "sd":
        return aoi_sd(policy, traffic)
    return analytic_ccdf(policy, traffic, t)


def sweep(spec: SweepSpec) -> list:
    """Evaluate the requested quantity at every (rho, policy) cell.

    Returns a list of row dicts (one per cell, and per grid t for
    ccdf sweeps) with keys rho, policy, quantity, t, analytic,
    simulated, sim_se, gap, error.  Numeric failures are recorded in
    the error column instead of aborting the sweep.
    """
    rows = []
    t_points: Sequence[Optional[float]]
    t_points = spec.t_grid if spec.quantity == "ccdf" else (None,)
    for rho in spec.rho_grid:
        traffic = TrafficModel(rho * spec.dist.mu, spec.dist)
        for policy in spec.policies:
            sim_cache = None
            warm = 0
            if spec.engine in ("simulate", "both"):
                cfg = SimConfig(policy, traffic, segments=spec.segments,
                                seed=spec.seed)
                warm = cfg.warmup
                try:
                    sim_cache = run(cfg)
                except Exception as exc:   # annotate, keep sweeping
                    sim_cache = exc
            for t in t_points:
                row = {"rho": rho, "policy": str(policy),
                       "quantity": spec.quantity, "t": t,
                       "analytic": math.nan, "simulated": math.nan,
                       "sim_se": math.nan, "gap": math.nan, "error": ""}
                errors = []
                if spec.engine in ("analytic", "both"):
                    try:
                        row["analytic"] = _analytic_cell(policy, traffic,
                                                         spec.quantity, t)
                    except (UnsupportedPolicyError, InversionError,
                            NotImplementedError, ValueError,
                            ArithmeticError) as exc:
                        errors.append(f"analytic: {exc}")
                if isinstance(sim_cache, Exception):
                    errors.append(f"simulate: {sim_cache}")
                elif sim_cache is not None:
                    path, stats = sim_cache
                    if spec.quantity == "mean":
                        row["simulated"] = stats.time_avg_mean
                        row["sim_se"] = _batch_se(path, warmup=warm)
                    elif spec.quantity == "sd":
                        row["simulated"] = math.sqrt(stats.time_avg_variance)
                    else:
                        row["simulated"] = time_average_ccdf(path, t,
                                                             warmup=warm)
                if not math.isnan(row["analytic"]) and not math.isnan(row["simulated"]):
                    row["gap"] = abs(row["analytic"] - row["simulated"])
                row["error"] = "; ".join(errors)
                rows.append(row)
    return rows


def _default_order_grid(policy_a, policy_b, traffic, points: int = 48):
    scale = max(aoi_mean(policy_a, traffic), aoi_mean(policy_b, traffic))
    if not math.isfinite(scale):
        scale = 10.0 / traffic.mu
    return np.linspace(0.1 / traffic.mu, 4.0 * scale, points)


def order_check(policy_a: PolicyId, policy_b: PolicyId, traffic: TrafficModel,
                t_grid=None, tol: Optional[float] = None,
                engine: str = "analytic", segments: int = 200_000,
                seed: int = 0) -> OrderVerdict:
    """Compare two AoI laws in the stochastic order on a tail grid.

    engine="analytic" inverts both transforms; engine="simulate" uses
    time-average tail frequencies with a per-point tolerance of three
    binomial standard errors (unless tol is given).
    """
    if engine not in ("analytic", "simulate"):
        raise ValueError(f"unknown engine {engine!r}")
    if t_grid is None:
        t_grid = _default_order_grid(policy_a, policy_b, traffic)
    t_grid = np.asarray(t_grid, dtype=float)

    if engine == "analytic":
        cc_a = np.array([analytic_ccdf(policy_a, traffic, t) for t in t_grid])
        cc_b = np.array([analytic_ccdf(policy_b, traffic, t) for t in t_grid])
        tol_vec = np.full_like(t_grid, 1e-6 if tol is None else tol)
    else:
        paths = {}
        for pol in (policy_a, policy_b):
            cfg = SimConfig(pol, traffic, segments=segments, seed=seed)
            path, _ = run(cfg)
            paths[pol] = np.array(
                [time_average_ccdf(path, t, warmup=cfg.warmup) for t in t_grid])
        cc_a, cc_b = paths[policy_a], paths[policy_b]
        if tol is None:
            p = 0.5 * (cc_a + cc_b)
            tol_vec = 3.0 * np.sqrt(np.maximum(p * (1.0 - p), 1e-12) / segments)
        else:
            tol_vec = np.full_like(t_grid, tol)

    exc_ab = float(np.max(cc_a - cc_b - tol_vec))   # how far a<=st b fails
    exc_ba = float(np.max(cc_b - cc_a - tol_vec))
    if exc_ab <= 0.0:
        relation, viol = "a<=st b", float(np.max(cc_a - cc_b))
    elif exc_ba <= 0.0:
        relation, viol = "b<=st a", float(np.max(cc_b - cc_a))
    else:
        relation, viol = "incomparable", min(exc_ab, exc_ba)
    return OrderVerdict(policy_a, policy_b, relation, viol,
                        tuple(t_grid), float(tol_vec.max()))


def high_traffic_check(policy: PolicyId, dist: ServiceDistribution,
                       rho_large: float, segments: int = 200_000,
                       seed: int = 0) -> dict:
    """Compare a heavy-load simulation against the limiting law.

    rho_large must be at least 50.  P(1) is rejected: its limit depends
    on the service law near zero and is degenerate for deterministic
    service.
    """
    if rho_large < 50:
        raise ValueError("high-traffic check requires rho >= 50")
    limit_mean, limit_var = high_traffic_moments(policy, dist)

    traffic = TrafficModel(rho_large * dist.mu, dist)
    cfg = SimConfig(policy, traffic, segments=segments, seed=seed)
    path, stats = run(cfg)
    warm = cfg.warmup

    cfg = _ccdf_config(dist)
    grid = np.linspace(0.25 * limit_mean, limit_mean + 4.0 * math.sqrt(limit_var), 40)
    sup_gap = 0.0
    for t in grid:
        lim = invert_ccdf(lambda s: high_traffic_limit_lt(policy, dist, s), t, cfg)
        emp = time_average_ccdf(path, t, warmup=warm)
        sup_gap = max(sup_gap, abs(lim - emp))

    return {
        "policy": str(policy),
        "rho": rho_large,
        "sim_mean": stats.time_avg_mean,
        "limit_mean": limit_mean,
        "mean_rel_err": abs(stats.time_avg_mean - limit_mean) / limit_mean,
        "sim_variance": stats.time_avg_variance,
        "limit_variance": limit_var,
        "var_rel_err": abs(stats.time_avg_variance - limit_var) / limit_var,
        "ccdf_sup_gap": sup_gap,
        "grid": grid,
    }


def monotonicity_probe(m: float, h: float = 1e-4) -> dict:
    """Sign of the second derivative of 1 / (m s e^s + 1) near s = 0.

    A completely monotone density forces a convex transform, so a
    negative second derivative near the origin rules the transform out
    as a Laplace transform of a positive density.  Reports the central
    second difference at s in {1e-3, 1e-2, 1e-1} and the sign pattern;
    it does not adjudicate anything beyond that derivative criterion.
    """
    if m <= 0:
        raise ValueError("m must be positive")

    def lt(s: float) -> float:
        return 1.0 / (m * s * math.exp(s) + 1.0)

    points = (1e-3, 1e-2, 1e-1)
    second = {s: (lt(s + h) - 2.0 * lt(s) + lt(s - h)) / h**2 for s in points}
    signs = [math.copysign(1.0, v) for v in second.values()]
    if all(v < 0 for v in second.values()):
        verdict = "negative near zero"
    elif all(v > 0 for v in second.values()):
        verdict = "positive near zero"
    else:
        verdict = "mixed"
    return {"m": m, "second_derivative": second, "sign_pattern": signs,
            "verdict": verdict}


# ---------------------------------------------------------------------------
# Figure-style sweep presets
# ---------------------------------------------------------------------------

_RHO_GRID = tuple(np.geomspace(0.125, 8.0, 13))
_ALL_POLICIES = (PolicyId("B", 1), PolicyId("P", 1), PolicyId("B", 2), PolicyId("P", 2))

FIGURE_PRESETS = {
    # mean and sd versus rho, exponential then deterministic service
    "fig6": SweepSpec(_ALL_POLICIES, ServiceDistribution.exponential(1.0),
                      _RHO_GRID, quantity="mean"),
    "fig7": SweepSpec(_ALL_POLICIES, ServiceDistribution.exponential(1.0),
                      _RHO_GRID, quantity="sd"),
    "fig9": SweepSpec(_ALL_POLICIES, ServiceDistribution.deterministic(1.0),
                      _RHO_GRID, quantity="mean"),
    "fig10": SweepSpec(_ALL_POLICIES, ServiceDistribution.deterministic(1.0),
                       _RHO_GRID, quantity="sd"),
}


def figure_preset(name: str) -> SweepSpec:
    try:
        return FIGURE_PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; "
                         f"have {sorted(FIGURE_PRESETS)}") from None
