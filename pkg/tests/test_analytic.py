import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from aoiq.analytic import (
    B1,
    B2,
    P1,
    P2,
    PolicyId,
    TrafficModel,
    UnsupportedPolicyError,
    aoi_lt,
    aoi_lt_from_palm,
    aoi_mean,
    aoi_sd,
    aoi_variance,
    closed_density_exp,
    det_p1_moment,
    det_p1_transform,
    high_traffic_limit_lt,
    high_traffic_moments,
    k_chain_p0,
    kernel_q,
    mean_segment,
    palm_conditional_lt,
    q_polynomial,
    segment_lt,
)
from aoiq.dist import ServiceDistribution

EXP1 = ServiceDistribution.exponential(1.0)
DET1 = ServiceDistribution.deterministic(1.0)
ALL_POLICIES = (B1, P1, B2, P2)


def traffic(rho, dist=EXP1):
    return TrafficModel(rho * dist.mu, dist)


# ---------------------------------------------------------------------------
# policy tokens
# ---------------------------------------------------------------------------

def test_policy_parse():
    assert PolicyId.parse("b2") == B2
    assert PolicyId.parse(" P1 ") == P1
    assert str(PolicyId.parse("b10")) == "B10"
    for bad in ("x2", "b", "b0", "p-1", "2b"):
        with pytest.raises(ValueError):
            PolicyId.parse(bad)


def test_traffic_model():
    tr = TrafficModel(2.0, EXP1)
    assert tr.rho == pytest.approx(2.0)
    assert tr.g_lam() == pytest.approx(1.0 / 3.0)
    with pytest.raises(ValueError):
        TrafficModel(0.0, EXP1)


# ---------------------------------------------------------------------------
# Markov-renewal kernel and segments
# ---------------------------------------------------------------------------

def test_kernel_exp_values():
    tr = TrafficModel(1.0, EXP1)
    # from a busy departure: next segment is one service; leaving the
    # system empty means no arrival beat the service
    assert kernel_q(tr, 1, 0, 1.0) == pytest.approx((1.0 - math.exp(-2.0)) / 2.0)
    assert kernel_q(tr, 1, 1, 1.0) == pytest.approx(
        (1.0 - math.exp(-1.0)) - (1.0 - math.exp(-2.0)) / 2.0)
    # total mass per row is 1, and the j=0 limit is Ghat(lam)
    for i in (0, 1):
        assert kernel_q(tr, i, 0, 200.0) + kernel_q(tr, i, 1, 200.0) == pytest.approx(1.0)
        assert kernel_q(tr, i, 0, 200.0) == pytest.approx(tr.g_lam())


def test_kernel_det_values():
    tr = TrafficModel(1.0, DET1)
    assert kernel_q(tr, 1, 0, 0.5) == 0.0
    assert kernel_q(tr, 1, 0, 2.0) == pytest.approx(math.exp(-1.0))
    # idle wait must fit in the remaining x - 1
    assert kernel_q(tr, 0, 0, 2.0) == pytest.approx(
        (1.0 - math.exp(-1.0)) * math.exp(-1.0))


def test_kernel_generic_quadrature_matches_exp():
    pdf = lambda u: math.exp(-u)
    generic = ServiceDistribution.generic(
        lambda rng, size: rng.exponential(1.0, size),
        lambda s: 1.0 / (1.0 + s), mean=1.0, second_moment=2.0, pdf=pdf)
    tr_g = TrafficModel(1.0, generic)
    tr_e = TrafficModel(1.0, EXP1)
    for i in (0, 1):
        for j in (0, 1):
            for x in (0.5, 1.0, 3.0):
                assert kernel_q(tr_g, i, j, x) == pytest.approx(
                    kernel_q(tr_e, i, j, x), abs=1e-8)


def test_kernel_generic_without_pdf_rejected():
    generic = ServiceDistribution.generic(
        lambda rng, size: rng.exponential(1.0, size),
        lambda s: 1.0 / (1.0 + s), mean=1.0, second_moment=2.0)
    with pytest.raises(NotImplementedError):
        kernel_q(TrafficModel(1.0, generic), 0, 0, 1.0)


@settings(max_examples=40, deadline=None)
@given(i=st.integers(0, 1), j=st.integers(0, 1),
       x=st.floats(0.1, 20.0), y=st.floats(0.1, 20.0),
       rho=st.floats(0.2, 4.0))
def test_kernel_monotone_in_x(i, j, x, y, rho):
    tr = traffic(rho)
    lo, hi = sorted((x, y))
    assert kernel_q(tr, i, j, lo) <= kernel_q(tr, i, j, hi) + 1e-12


def test_k_chain_p0():
    assert k_chain_p0(TrafficModel(1.0, EXP1)) == pytest.approx(0.5)
    assert k_chain_p0(TrafficModel(2.0, DET1)) == pytest.approx(math.exp(-2.0))


def test_segment_lt_and_mean():
    tr = TrafficModel(1.0, EXP1)
    s = 0.7
    assert segment_lt(tr, 1, s) == pytest.approx(1.0 / (1.0 + s))
    assert segment_lt(tr, 0, s) == pytest.approx(1.0 / (1.0 + s) ** 2)
    g_lam = tr.g_lam()
    assert segment_lt(tr, None, s) == pytest.approx(
        (1.0 - g_lam) * segment_lt(tr, 1, s) + g_lam * segment_lt(tr, 0, s))
    # transform derivative at 0 reproduces the closed mean
    h = 1e-5
    num_mean = -(segment_lt(tr, None, h).real - segment_lt(tr, None, -h).real) / (2 * h)
    assert num_mean == pytest.approx(mean_segment(tr), rel=1e-6)
    assert mean_segment(tr) == pytest.approx(1.5)
    assert mean_segment(TrafficModel(1.0, DET1)) == pytest.approx(1.0 + math.exp(-1.0))


# ---------------------------------------------------------------------------
# Palm terms and the fixed point
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("policy", [B2, P2])
@pytest.mark.parametrize("dist", [EXP1, DET1])
@pytest.mark.parametrize("rho", [0.5, 1.0, 2.0])
def test_palm_terms_sum_to_one_at_zero(policy, dist, rho):
    tr = traffic(rho, dist)
    total = sum(palm_conditional_lt(policy, tr, i, j, 0.0)
                for i in (0, 1) for j in (0, 1))
    assert total.real == pytest.approx(1.0, abs=1e-12)
    assert total.imag == pytest.approx(0.0, abs=1e-14)


def test_palm_terms_unsupported():
    tr = traffic(1.0)
    with pytest.raises(UnsupportedPolicyError):
        palm_conditional_lt(B1, tr, 0, 0, 1.0)
    with pytest.raises(ValueError):
        palm_conditional_lt(B2, tr, 0, 2, 1.0)


@pytest.mark.parametrize("policy", [B2, P2])
@pytest.mark.parametrize("dist", [EXP1, DET1])
@pytest.mark.parametrize("rho", [0.5, 1.0, 2.0])
def test_fixed_point_identity(policy, dist, rho):
    # the Palm-term assembly and the product closed form are derived
    # independently; they must agree everywhere
    tr = traffic(rho, dist)
    rng = np.random.default_rng(0)
    for s in rng.uniform(0.05, 8.0, 20):
        a = aoi_lt(policy, tr, s)
        b = aoi_lt_from_palm(policy, tr, s)
        assert abs(a - b) < 1e-12


def test_b2_limit_branch_continuous_at_lam():
    tr = TrafficModel(1.3, EXP1)
    at = aoi_lt(B2, tr, 1.3)
    near = aoi_lt(B2, tr, 1.3 + 1e-7)
    assert abs(at - near) < 1e-6


# ---------------------------------------------------------------------------
# transforms, means, variances
# ---------------------------------------------------------------------------

def test_aoi_lt_at_zero_is_one():
    tr = traffic(1.0)
    for policy in ALL_POLICIES:
        assert aoi_lt(policy, tr, 0.0) == 1.0 + 0.0j


def test_exp_means_unit_rates():
    tr = TrafficModel(1.0, EXP1)
    assert aoi_mean(B2, tr) == pytest.approx(8.0 / 3.0)
    assert aoi_mean(P2, tr) == pytest.approx(29.0 / 12.0)
    assert aoi_mean(P1, tr) == pytest.approx(2.0)
    assert aoi_mean(B1, tr) == pytest.approx(5.0 / 2.0)


def test_det_means():
    tr = TrafficModel(1.0, DET1)
    # hand-evaluated closed forms at lam = v = 1
    assert aoi_mean(P1, tr) == pytest.approx(math.e)
    assert aoi_mean(B1, tr) == pytest.approx(1.0 + 1.0 + 0.5 / 2.0)


@pytest.mark.parametrize("policy", ALL_POLICIES)
@pytest.mark.parametrize("dist", [EXP1, DET1])
@pytest.mark.parametrize("rho", [0.5, 1.0, 2.0])
def test_mean_matches_transform_derivative(policy, dist, rho):
    tr = traffic(rho, dist)
    h = 1e-5
    num = -(aoi_lt(policy, tr, h).real - aoi_lt(policy, tr, -h).real) / (2 * h)
    assert num == pytest.approx(aoi_mean(policy, tr), rel=1e-4)


def test_p2_exp_sd_closed_form():
    tr = TrafficModel(1.0, EXP1)
    assert aoi_sd(P2, tr) == pytest.approx(math.sqrt(335.0) / 12.0)
    # closed form against the generic log-derivative route
    h = 1e-4
    lp = cmath.log(aoi_lt(P2, tr, +h)).real
    lm = cmath.log(aoi_lt(P2, tr, -h)).real
    assert (lp + lm) / h**2 == pytest.approx(aoi_variance(P2, tr), rel=1e-3)


def test_variance_positive():
    for dist in (EXP1, DET1):
        tr = traffic(1.5, dist)
        for policy in ALL_POLICIES:
            assert aoi_variance(policy, tr) > 0.0


def test_infinite_second_moment_gives_infinite_mean():
    heavy = ServiceDistribution.generic(
        lambda rng, size: rng.pareto(1.5, size) + 1.0,
        lambda s: 1.0 / (1.0 + s), mean=3.0, second_moment=math.inf)
    tr = TrafficModel(1.0, heavy)
    assert aoi_mean(B2, tr) == math.inf
    assert aoi_mean(P1, tr) < math.inf    # P1 never holds more than one service


def test_unsupported_policy():
    tr = traffic(1.0)
    with pytest.raises(UnsupportedPolicyError):
        aoi_lt(PolicyId("B", 3), tr, 1.0)
    with pytest.raises(UnsupportedPolicyError):
        aoi_mean(PolicyId("P", 4), tr)


@settings(max_examples=60, deadline=None)
@given(rho=st.floats(0.1, 8.0), s=st.floats(1e-3, 50.0),
       kind=st.sampled_from(["exp", "det"]),
       policy=st.sampled_from(ALL_POLICIES))
def test_transform_bounds(rho, s, kind, policy):
    dist = EXP1 if kind == "exp" else DET1
    val = aoi_lt(policy, traffic(rho, dist), s)
    # Laplace transform of a probability law at real s > 0
    assert abs(val.imag) < 1e-12
    assert 0.0 < val.real <= 1.0


@settings(max_examples=40, deadline=None)
@given(rho=st.floats(0.1, 8.0), s1=st.floats(1e-3, 30.0), s2=st.floats(1e-3, 30.0),
       policy=st.sampled_from(ALL_POLICIES))
def test_transform_decreasing_on_real_axis(rho, s1, s2, policy):
    tr = traffic(rho)
    lo, hi = sorted((s1, s2))
    assert aoi_lt(policy, tr, hi).real <= aoi_lt(policy, tr, lo).real + 1e-12


# ---------------------------------------------------------------------------
# closed densities, exponential service
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("policy", [B2, P2])
@pytest.mark.parametrize("lam", [0.3, 1.0, 2.5])
def test_closed_density_normalized_and_mean(policy, lam):
    total, _ = quad(lambda t: closed_density_exp(policy, lam, t), 0.0, 120.0,
                    limit=300)
    assert total == pytest.approx(1.0, abs=1e-8)
    mean, _ = quad(lambda t: t * closed_density_exp(policy, lam, t), 0.0, 200.0,
                   limit=300)
    tr = TrafficModel(lam, EXP1)
    assert mean == pytest.approx(aoi_mean(policy, tr), rel=1e-7)


def test_closed_density_unit_lam_branch():
    # the lam = 1 formulas are the removable-singularity limits; the
    # general form loses precision as lam -> 1, so approach from 1e-4 out
    for policy in (B2, P2):
        for t in (0.4, 1.0, 3.0):
            near = closed_density_exp(policy, 1.0 + 1e-4, t)
            assert closed_density_exp(policy, 1.0, t) == pytest.approx(near, rel=5e-3)


def test_closed_density_rate_scaling():
    # density transforms as mu * f(mu t) under a service-rate change
    for t in (0.2, 0.8, 2.0):
        assert closed_density_exp(B2, 2.0, t, mu=2.0) == pytest.approx(
            2.0 * closed_density_exp(B2, 1.0, 2.0 * t))


def test_closed_density_unsupported():
    with pytest.raises(UnsupportedPolicyError):
        closed_density_exp(B1, 1.0, 1.0)


# ---------------------------------------------------------------------------
# high-traffic limits
# ---------------------------------------------------------------------------

def test_high_traffic_limit_transforms():
    s = 0.9
    # B(n) keeps n services plus a stationary-excess service; exponential
    # excess is again exponential
    assert high_traffic_limit_lt(B2, EXP1, s) == pytest.approx((1.0 / (1.0 + s)) ** 3)
    assert high_traffic_limit_lt(P2, EXP1, s) == pytest.approx((1.0 / (1.0 + s)) ** 2)
    assert high_traffic_limit_lt(PolicyId("P", 4), EXP1, s) == pytest.approx(
        (1.0 / (1.0 + s)) ** 2)


def test_high_traffic_moments():
    assert high_traffic_moments(B2, EXP1) == pytest.approx((3.0, 3.0))
    assert high_traffic_moments(P2, EXP1) == pytest.approx((2.0, 2.0))
    assert high_traffic_moments(P2, DET1) == pytest.approx((1.5, 1.0 / 12.0))
    assert high_traffic_moments(B1, DET1) == pytest.approx((1.5, 1.0 / 12.0))
    assert high_traffic_moments(B2, DET1) == pytest.approx((2.5, 1.0 / 12.0))


def test_high_traffic_p1_rejected():
    with pytest.raises(UnsupportedPolicyError):
        high_traffic_limit_lt(P1, EXP1, 1.0)
    with pytest.raises(UnsupportedPolicyError):
        high_traffic_moments(P1, DET1)


def test_transform_converges_to_high_traffic_limit():
    s = 1.3
    tr = TrafficModel(1e4, EXP1)
    assert abs(aoi_lt(B2, tr, s) - high_traffic_limit_lt(B2, EXP1, s)) < 1e-3
    trd = TrafficModel(1e4, DET1)
    assert abs(aoi_lt(P2, trd, s) - high_traffic_limit_lt(P2, DET1, s)) < 1e-3


# ---------------------------------------------------------------------------
# deterministic-service P(1)
# ---------------------------------------------------------------------------

def test_det_p1_transform_values():
    m, lt = det_p1_transform(1.0)
    assert m == pytest.approx(math.e)
    s = 0.8
    assert lt(s) == pytest.approx(1.0 / (m * s * math.exp(s) + 1.0))
    assert lt(1e4) == 0.0     # overflow guard region
    with pytest.raises(ValueError):
        det_p1_transform(-1.0)


def test_q_polynomial():
    z = 0.7
    assert q_polynomial(1, z) == pytest.approx(z)
    assert q_polynomial(2, z) == pytest.approx(2.0 * z + 2.0 * z**2)
    assert q_polynomial(3, z) == pytest.approx(3.0 * z + 12.0 * z**2 + 6.0 * z**3)


def test_det_p1_moments():
    # E[alpha] = m, E[alpha^2] = 2 m^2 - 2 m with m = e^rho / rho
    assert det_p1_moment(1.0, 1) == pytest.approx(math.e)
    assert det_p1_moment(1.0, 2) == pytest.approx(2.0 * math.e**2 - 2.0 * math.e)
    m = math.exp(0.5) / 0.5
    assert det_p1_moment(0.5, 1) == pytest.approx(m)


def test_det_p1_moments_match_transform_derivatives():
    _, lt = det_p1_transform(1.3)
    h = 1e-5
    num = -(lt(h).real - lt(-h).real) / (2 * h)
    assert num == pytest.approx(det_p1_moment(1.3, 1), rel=1e-6)
