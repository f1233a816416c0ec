"""Closed-form age-of-information results for small-buffer M/GI/1 systems.

Covers the four policies with explicit stationary-AoI Laplace transforms:

* ``B(1)``  single cell, blocking;
* ``P(1)``  single cell, preemptive push-out;
* ``B(2)``  two cells, FIFO with blocking;
* ``P(2)``  two cells, non-preemptive push-out.

For B(2)/P(2) the transform is available both as a product closed form and
assembled from the four conditional Palm terms through the semi-Markov
fixed point; the two routes agree to machine precision and the test suite
enforces it.  Also here: the Markov-renewal kernel of the occupancy
process, segment-length transforms, means and standard deviations, closed
densities for exponential service, high-traffic limit transforms, and the
moment machinery for the deterministic-service P(1) system.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

from scipy.integrate import quad

from .dist import ServiceDistribution

__all__ = [
    "TrafficModel",
    "PolicyId",
    "B1",
    "P1",
    "B2",
    "P2",
    "kernel_q",
    "k_chain_p0",
    "segment_lt",
    "mean_segment",
    "palm_conditional_lt",
    "aoi_lt",
    "aoi_lt_from_palm",
    "aoi_mean",
    "aoi_variance",
    "aoi_sd",
    "closed_density_exp",
    "high_traffic_limit_lt",
    "high_traffic_moments",
    "det_p1_transform",
    "det_p1_moment",
    "q_polynomial",
    "UnsupportedPolicyError",
]

_POLE_TOL = 1e-9   # |s - pole| below which removable singularities use limits


class UnsupportedPolicyError(ValueError):
    """Raised when no closed form exists for the requested policy."""


@dataclass(frozen=True)
class TrafficModel:
    """Poisson arrivals of rate ``lam`` feeding service law ``dist``."""

    lam: float
    dist: ServiceDistribution

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"arrival rate must be positive, got {self.lam}")

    @property
    def rho(self) -> float:
        return self.lam * self.dist.mean

    @property
    def mu(self) -> float:
        return self.dist.mu

    def g(self, s: complex) -> complex:
        return self.dist.laplace(s)

    def g_lam(self) -> float:
        return self.dist.laplace(self.lam).real


@dataclass(frozen=True)
class PolicyId:
    """Buffer policy: kind 'B' (FIFO blocking) or 'P' (push-out), n cells."""

    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in ("B", "P"):
            raise ValueError(f"policy kind must be 'B' or 'P', got {self.kind!r}")
        if self.n < 1:
            raise ValueError(f"buffer size must be >= 1, got {self.n}")

    @property
    def preemptive(self) -> bool:
        return self.kind == "P" and self.n == 1

    @classmethod
    def parse(cls, token: str) -> "PolicyId":
        token = token.strip().lower()
        if len(token) < 2 or token[0] not in "bp" or not token[1:].isdigit():
            raise ValueError(f"bad policy token {token!r}; expected e.g. b2 or p1")
        return cls(kind=token[0].upper(), n=int(token[1:]))

    def __str__(self) -> str:
        return f"{self.kind}{self.n}"


B1 = PolicyId("B", 1)
P1 = PolicyId("P", 1)
B2 = PolicyId("B", 2)
P2 = PolicyId("P", 2)


# ---------------------------------------------------------------------------
# Markov-renewal structure of the occupancy process
# ---------------------------------------------------------------------------

def kernel_q(traffic: TrafficModel, i: int, j: int, x: float) -> float:
    """Markov-renewal kernel Q_ij(x) of the occupancy chain at departures.

    Q_ij(x) is the probability, from occupancy ``i`` at a departure, that
    the next inter-departure time is <= x and leaves occupancy ``j``.
    Closed forms for exponential and deterministic service; adaptive
    quadrature over the service density otherwise.
    """
    if i not in (0, 1) or j not in (0, 1):
        raise ValueError("kernel indices must be 0 or 1")
    if x < 0:
        raise ValueError("kernel argument must be nonnegative")
    if x == 0.0:
        return 0.0
    lam = traffic.lam
    d = traffic.dist

    if d.kind == "det":
        v = d.value
        if x < v:
            return 0.0
        p_idle = math.exp(-lam * v)          # no arrival during service
        if i == 1:
            return p_idle if j == 0 else 1.0 - p_idle
        w = 1.0 - math.exp(-lam * (x - v))   # arrival wait fits in x - v
        return w * p_idle if j == 0 else w * (1.0 - p_idle)

    if d.kind == "exp":
        mu = d.rate
        q10 = mu * (1.0 - math.exp(-(lam + mu) * x)) / (lam + mu)
        gx = 1.0 - math.exp(-mu * x)
        if i == 1:
            return q10 if j == 0 else gx - q10
        q00 = q10 - math.exp(-lam * x) * gx
        if j == 0:
            return q00
        # integral of (1 - e^{-lam (x-u)}) dG(u) over [0, x]
        if abs(lam - mu) < 1e-12:
            conv = mu * x * math.exp(-lam * x)
        else:
            conv = mu * (math.exp(-mu * x) - math.exp(-lam * x)) / (lam - mu)
        a = gx - conv
        return a - q00

    pdf = d.pdf
    if pdf is None:
        raise NotImplementedError(
            "generic kernel quadrature needs a density on the service law"
        )
    if i == 1:
        w = (lambda u: math.exp(-lam * u)) if j == 0 else (
            lambda u: 1.0 - math.exp(-lam * u))
    else:
        if j == 0:
            w = lambda u: (1.0 - math.exp(-lam * (x - u))) * math.exp(-lam * u)
        else:
            w = lambda u: (1.0 - math.exp(-lam * (x - u))) * (1.0 - math.exp(-lam * u))
    val, err = quad(lambda u: w(u) * pdf(u), 0.0, x, epsabs=1e-10, limit=200)
    if err > 1e-7:
        raise ArithmeticError(
            f"kernel quadrature did not converge: estimate {val}, error {err}"
        )
    return val


def k_chain_p0(traffic: TrafficModel) -> float:
    """P0(K_n = 0): a departure leaves the system empty with prob Ghat(lam)."""
    return traffic.g_lam()


def segment_lt(traffic: TrafficModel, i: Optional[int], s: complex) -> complex:
    """Laplace transform of the inter-departure (segment) length.

    ``i`` conditions on the occupancy left behind by the previous
    departure; ``i=None`` gives the unconditional transform.
    """
    g = traffic.g(s)
    lam = traffic.lam
    if i == 1:
        return g
    phi0 = lam / (lam + s) * g
    if i == 0:
        return phi0
    if i is None:
        glam = traffic.g_lam()
        return (1.0 - glam) * g + glam * phi0
    raise ValueError(f"conditioning index must be 0, 1 or None, got {i}")


def mean_segment(traffic: TrafficModel) -> float:
    """Mean inter-departure time, 1/mu + Ghat(lam)/lam."""
    return traffic.dist.mean + traffic.g_lam() / traffic.lam


# ---------------------------------------------------------------------------
# Conditional Palm terms for B(2) and P(2)
# ---------------------------------------------------------------------------

def palm_conditional_lt(
    policy: PolicyId, traffic: TrafficModel, i: int, j: int, s: complex
) -> complex:
    """E0[exp(-s * age at a departure); K_{-1}=i, K_0=j] for B(2)/P(2).

    The four terms at fixed s sum to the Palm transform of the reset age;
    at s = 0 they sum to 1.
    """
    if (policy.kind, policy.n) not in (("B", 2), ("P", 2)):
        raise UnsupportedPolicyError(f"no Palm terms for policy {policy}")
    if i not in (0, 1) or j not in (0, 1):
        raise ValueError("conditioning indices must be 0 or 1")
    s = complex(s)
    lam = traffic.lam
    g_s = traffic.g(s)
    g_lam = traffic.g_lam()
    g_sl = traffic.g(s + lam)

    if i == 0:
        # identical under both policies: at most one message around
        core = g_sl if j == 0 else g_s - g_sl
        return g_lam * core

    if policy.kind == "B":
        if abs(s - lam) < _POLE_TOL:
            head = -lam * traffic.dist.laplace_deriv(lam)
        else:
            head = lam / (lam - s) * (g_s - g_lam)
    else:
        head = lam / (lam + s) * (1.0 - g_sl)
    return head * (g_sl if j == 0 else g_s - g_sl)


# ---------------------------------------------------------------------------
# Stationary AoI transforms
# ---------------------------------------------------------------------------

def _delivered_age_factor(traffic: TrafficModel, s: complex) -> complex:
    """Third factor shared by the B(2)/P(2) product forms.

    Mixture of the residual inter-arrival wait and the stationary-excess
    service time, weighted by the idle/busy split at departures.
    """
    lam, rho = traffic.lam, traffic.rho
    g_lam = traffic.g_lam()
    g_sl = traffic.g(s + lam)
    gi_s = traffic.dist.laplace_excess(s)
    # written with Ghat(lam) cancelled so it survives Ghat(lam) -> 0
    return ((lam / (lam + s)) * g_sl + rho * gi_s) / (rho + g_lam)


def aoi_lt(policy: PolicyId, traffic: TrafficModel, s: complex) -> complex:
    """Laplace transform E[exp(-s * alpha)] of the stationary AoI.

    Closed forms exist for B1, P1, B2 and P2 only.  s = 0 returns exactly
    1; removable singularities (s = lam in the B2 form, s = 0 in B1) are
    resolved by limit branches.
    """
    s = complex(s)
    if abs(s) < 1e-12:
        return 1.0 + 0.0j
    lam = traffic.lam
    g_s = traffic.g(s)
    key = (policy.kind, policy.n)

    if key == ("P", 1):
        num = lam * traffic.g(s + lam)
        return num / (s + num)

    if key == ("B", 1):
        rho, mu = traffic.rho, traffic.mu
        return (rho / (1.0 + rho)) * mu * (s + lam - lam * g_s) * g_s / (s * (s + lam))

    if key == ("B", 2):
        g_lam = traffic.g_lam()
        if abs(s - lam) < _POLE_TOL:
            mid = g_lam - lam * traffic.dist.laplace_deriv(lam)
        else:
            mid = g_lam + lam * (g_s - g_lam) / (lam - s)
        return g_s * mid * _delivered_age_factor(traffic, s)

    if key == ("P", 2):
        g_lam = traffic.g_lam()
        mid = g_lam + lam / (lam + s) * (1.0 - traffic.g(s + lam))
        return g_s * mid * _delivered_age_factor(traffic, s)

    raise UnsupportedPolicyError(f"no closed-form AoI transform for {policy}")


def aoi_lt_from_palm(policy: PolicyId, traffic: TrafficModel, s: complex) -> complex:
    """Assemble the stationary transform from the four Palm terms.

    Independent route from :func:`aoi_lt`: plugs the conditional Palm
    terms into the semi-Markov fixed point.  Only B(2) and P(2).
    """
    s = complex(s)
    if abs(s) < 1e-12:
        return 1.0 + 0.0j
    lam, rho = traffic.lam, traffic.rho
    g_s = traffic.g(s)
    g_lam = traffic.g_lam()
    e0 = (palm_conditional_lt(policy, traffic, 0, 0, s)
          + palm_conditional_lt(policy, traffic, 1, 0, s))
    e1 = (palm_conditional_lt(policy, traffic, 0, 1, s)
          + palm_conditional_lt(policy, traffic, 1, 1, s))
    num = e0 * (1.0 - lam / (lam + s) * g_s) + e1 * (1.0 - g_s)
    return (lam / s) * num / (rho + g_lam)


def aoi_mean(policy: PolicyId, traffic: TrafficModel) -> float:
    """Closed-form mean stationary AoI; +inf when E[sigma^2] diverges
    (B1/B2/P2 formulas all involve the second service moment)."""
    lam = traffic.lam
    d = traffic.dist
    key = (policy.kind, policy.n)

    if key == ("P", 1):
        return 1.0 / (lam * traffic.g_lam())

    m2 = d.moment(2)
    if not math.isfinite(m2):
        return math.inf
    g_lam = traffic.g_lam()
    gp_lam = d.laplace_deriv(lam).real

    if key == ("B", 1):
        return d.mean + 1.0 / lam + 0.5 * lam * m2 / (1.0 + traffic.rho)
    if key == ("B", 2):
        return (2.0 * d.mean
                - (1.0 - g_lam) / lam
                + (g_lam - lam * gp_lam + 0.5 * lam**2 * m2)
                / (lam * (traffic.rho + g_lam)))
    if key == ("P", 2):
        return (d.mean
                + (1.0 - g_lam + lam * gp_lam) / lam
                + (g_lam - lam * gp_lam + 0.5 * lam**2 * m2)
                / (lam * (traffic.rho + g_lam)))
    raise UnsupportedPolicyError(f"no closed-form mean for {policy}")


def aoi_variance(policy: PolicyId, traffic: TrafficModel, h: float = 1e-4) -> float:
    """Variance of the stationary AoI.

    P(2) with exponential service uses the closed form; every other
    supported case differentiates the log-transform twice at s = 0
    (second-order central differences, step ``h``).
    """
    if (policy.kind, policy.n) == ("P", 2) and traffic.dist.kind == "exp":
        return _p2_exp_sd(traffic) ** 2
    if not math.isfinite(aoi_mean(policy, traffic)):
        return math.inf
    lp = cmath.log(aoi_lt(policy, traffic, +h)).real
    lm = cmath.log(aoi_lt(policy, traffic, -h)).real
    return (lp + lm) / h**2


def aoi_sd(policy: PolicyId, traffic: TrafficModel) -> float:
    var = aoi_variance(policy, traffic)
    return math.sqrt(var) if math.isfinite(var) else math.inf


def _p2_exp_sd(traffic: TrafficModel) -> float:
    rho, mu = traffic.rho, traffic.dist.rate
    c = [1, 6, 18, 34, 45, 56, 66, 60, 35, 12, 2]   # coefficients of rho^k
    radicand = sum(ck * rho**k for k, ck in enumerate(c))
    return math.sqrt(radicand) / (mu * rho * (rho + 1.0) ** 2 * (rho**2 + rho + 1.0))


# ---------------------------------------------------------------------------
# Closed densities, exponential service
# ---------------------------------------------------------------------------

def closed_density_exp(policy: PolicyId, lam: float, t: float, mu: float = 1.0) -> float:
    """Stationary AoI density for B(2)/P(2) with exponential service.

    Stated for the unit-rate normalization; general ``mu`` applies the
    substitution lam -> lam/mu, t -> mu*t (and the density scales by mu).
    """
    if t < 0:
        raise ValueError("density argument must be nonnegative")
    if (policy.kind, policy.n) not in (("B", 2), ("P", 2)):
        raise UnsupportedPolicyError(f"no closed density for {policy}")
    if mu != 1.0:
        return mu * closed_density_exp(policy, lam / mu, mu * t)

    near_one = abs(lam - 1.0) < _POLE_TOL
    if policy.kind == "B":
        if near_one:
            return (t**2 + t) * math.exp(-t) / 3.0
        c = lam / ((lam**2 + lam + 1.0) * (lam - 1.0) ** 2)
        q = 0.5 * lam * (lam - 1.0) ** 2 * t**2 + lam * (lam - 1.0) * t - 1.0
        return c * (q * math.exp(-t) + math.exp(-lam * t))

    if near_one:
        return ((7.0 + 2.0 * t) * math.exp(-2.0 * t)
                + (6.0 * t - 7.0) * math.exp(-t)) / 3.0
    denom = lam**2 + lam + 1.0
    q1 = ((lam**3 + lam**2 - 2.0 * lam) * t - lam**2 + lam + 3.0) / (denom * (lam - 1.0))
    q2 = ((lam**2 + lam) * t + lam**2 + 3.0 * lam + 3.0) / denom
    return (q1 * math.exp(-t)
            + q2 * math.exp(-(lam + 1.0) * t)
            - lam / (lam - 1.0) * math.exp(-lam * t))


# ---------------------------------------------------------------------------
# High-traffic (rho -> infinity) limits
# ---------------------------------------------------------------------------

def high_traffic_limit_lt(policy: PolicyId, dist: ServiceDistribution, s: complex) -> complex:
    """Limit transform as rho -> infinity.

    P(n), n >= 2: one full service plus a stationary-excess service;
    B(n), n >= 1: n full services plus a stationary-excess service.
    P(1) has no distribution-free limit and is rejected.
    """
    if policy.preemptive:
        raise UnsupportedPolicyError(
            "P1 high-traffic limit depends on the service law near 0; not supported"
        )
    if policy.kind == "P":
        return dist.laplace(s) * dist.laplace_excess(s)
    return dist.laplace(s) ** policy.n * dist.laplace_excess(s)


def high_traffic_moments(policy: PolicyId, dist: ServiceDistribution) -> tuple[float, float]:
    """(mean, variance) of the high-traffic limit distribution."""
    if policy.preemptive:
        raise UnsupportedPolicyError("P1 high-traffic limit not supported")
    k = 1 if policy.kind == "P" else policy.n
    m1, m2 = dist.moment(1), dist.moment(2)
    # stationary-excess moments from the size-biased representation
    mean_i = m2 / (2.0 * m1)
    var_srv = m2 - m1**2
    if dist.kind == "exp":
        var_i = 1.0 / dist.rate**2
    elif dist.kind == "det":
        var_i = dist.value**2 / 12.0
    else:
        raise NotImplementedError("excess variance needs a third moment for generic laws")
    return k * m1 + mean_i, k * var_srv + var_i


# ---------------------------------------------------------------------------
# Deterministic-service P(1): transform and moments
# ---------------------------------------------------------------------------

def det_p1_transform(rho: float):
    """AoI transform for P(1) with unit deterministic service,
    1 / (m * s * e^s + 1) with m = e^rho / rho.  Returns (m, eval)."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    m = math.exp(rho) / rho
    def lt(s: complex) -> complex:
        s = complex(s)
        if s.real > 300.0:      # m * s * e^s dominates far beyond overflow
            return 0.0 + 0.0j
        return 1.0 / (m * s * cmath.exp(s) + 1.0)
    return m, lt


def q_polynomial(p: int, z: float) -> float:
    """Q_p(z) = sum_{k=1..p} (p)_k * k^(p-k) * z^k (falling factorials);
    generating polynomial of the P(1) deterministic-service moments."""
    if p < 1:
        raise ValueError("polynomial order must be >= 1")
    return float(sum(math.perm(p, k) * k ** (p - k) * z**k for k in range(1, p + 1)))


def det_p1_moment(rho: float, p: int) -> float:
    """p-th moment of the P(1) AoI with unit deterministic service:
    (-1)^p Q_p(-m), m = e^rho / rho."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    if p < 1:
        raise ValueError("moment order must be >= 1")
    m = math.exp(rho) / rho
    return float(sum(math.perm(p, k) * k ** (p - k) * m**k * (-1) ** (p + k)
                     for k in range(1, p + 1)))
