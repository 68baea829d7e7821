import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from conjfilter import (
    GAMMA_CIR,
    KALMAN,
    RADIAL_OU,
    DegenerateDistributionError,
    KalmanTheta,
    MixtureDistribution,
    ScaleTheta,
    c2i_shifted,
    component_logpdf,
    log_abs_moment,
    moment_binom_identity,
)
from conjfilter.mixtures import abs_moment, normalize, prune_log_weights

from conftest import integrate_density, positive_integral

DELTAS = [1, 2, 2.5, 3, 7]


# -- Gaussian absolute moments --------------------------------------------------

def test_abs_moment_frozen_values():
    assert abs_moment(0) == pytest.approx(1.0, rel=1e-15)
    assert abs_moment(1) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-15)
    assert abs_moment(2) == pytest.approx(1.0, rel=1e-15)
    assert abs_moment(4) == pytest.approx(3.0, rel=1e-14)
    assert abs_moment(6) == pytest.approx(15.0, rel=1e-14)


@pytest.mark.parametrize("i", range(21))
def test_even_moments_are_double_factorials(i):
    expected = math.factorial(2 * i) / (2**i * math.factorial(i))
    assert np.exp(log_abs_moment(2 * i)) == pytest.approx(expected, rel=1e-10)


def test_moment_recursion():
    alpha = np.arange(1.0, 20.5, 0.5)
    lhs = abs_moment(alpha + 1)
    rhs = alpha * abs_moment(alpha - 1)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10)


def test_abs_moment_matches_quadrature_for_fractional_order():
    f = lambda x: abs(x) ** 2.5 * np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    val = 2 * integrate.quad(f, 0, np.inf, epsabs=1e-14)[0]
    assert abs_moment(2.5) == pytest.approx(val, rel=1e-10)


def test_negative_order_rejected():
    with pytest.raises(ValueError):
        log_abs_moment(-1)


@pytest.mark.parametrize("i", range(13))
def test_moment_binom_identity(i):
    for k in range(i + 1):
        lhs, rhs = moment_binom_identity(i, k)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_c2i_shifted_frozen():
    # E(X + 1)^4 = 3 + 6 + 1
    assert c2i_shifted(2, 1.0, 1.0) == pytest.approx(10.0, rel=1e-14)
    # E(2X + 3)^2 = 4 + 9
    assert c2i_shifted(1, 3.0, 4.0) == pytest.approx(13.0, rel=1e-14)
    assert c2i_shifted(0, 5.0, 2.0) == 1.0


@pytest.mark.parametrize("i", range(9))
@pytest.mark.parametrize("s,sigma2", [(0.0, 1.0), (0.7, 0.5), (-2.0, 3.0)])
def test_c2i_shifted_against_quadrature(i, s, sigma2):
    sigma = math.sqrt(sigma2)
    f = lambda x: (sigma * x + s) ** (2 * i) * np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)
    val = integrate.quad(f, -np.inf, np.inf, epsabs=0, epsrel=1e-13)[0]
    assert c2i_shifted(i, s, sigma2) == pytest.approx(val, rel=1e-8)


# -- weights --------------------------------------------------------------------

def test_normalize_sums_to_one():
    w = normalize(np.log([1.0, 2.0, 7.0]))
    np.testing.assert_allclose(w, [0.1, 0.2, 0.7], rtol=1e-14)


def test_all_minus_inf_is_degenerate():
    with pytest.raises(DegenerateDistributionError):
        normalize([-np.inf, -np.inf])


def test_large_log_weights_do_not_overflow():
    w = normalize([1000.0, 1000.0 + np.log(3.0)])
    np.testing.assert_allclose(w, [0.25, 0.75], rtol=1e-12)


def test_prune_zero_is_identity():
    lw = np.log([0.5, 1e-300, 0.5])
    assert prune_log_weights(lw, 0.0) is lw


def test_prune_drops_and_trims():
    out = prune_log_weights(np.log([0.6, 0.39, 0.01]), 0.05)
    np.testing.assert_allclose(np.exp(out), [0.6 / 0.99, 0.39 / 0.99], rtol=1e-14)


def test_mixture_weights_are_frozen():
    d = MixtureDistribution.from_weights(RADIAL_OU, ScaleTheta(1.0), [0.2, 0.8], delta=1)
    with pytest.raises(ValueError):
        d.log_weights[0] = 0.0
    assert d.length == 1


def test_mixture_length_skips_trailing_zero():
    d = MixtureDistribution.from_weights(RADIAL_OU, ScaleTheta(1.0), [0.0, 1.0, 0.0], delta=1)
    assert d.length == 1


def test_theta_validation():
    with pytest.raises(ValueError):
        KalmanTheta(0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        ScaleTheta(-1.0)
    with pytest.raises(ValueError):
        MixtureDistribution.single(RADIAL_OU, ScaleTheta(1.0), delta=0.5)
    with pytest.raises(TypeError):
        MixtureDistribution.single(KALMAN, ScaleTheta(1.0))


# -- component densities -------------------------------------------------------

@pytest.mark.parametrize("i", [0, 1, 3, 10])
@pytest.mark.parametrize("delta", DELTAS)
def test_sqrt_gamma_components_integrate_to_one(i, delta):
    theta = ScaleTheta(1.3)
    val = positive_integral(lambda x: component_logpdf(RADIAL_OU, i, theta, x, delta), 1.3)
    assert val == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("i", [0, 1, 3, 10])
@pytest.mark.parametrize("delta", DELTAS)
def test_gamma_components_integrate_to_one(i, delta):
    theta = ScaleTheta(0.8)
    val = positive_integral(lambda r: component_logpdf(GAMMA_CIR, i, theta, r, delta), 0.64)
    assert val == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("i", [0, 1, 4, 10])
def test_kalman_components_integrate_to_one(i):
    theta = KalmanTheta(0.4, -1.0, 2.0)
    val = integrate_density(lambda x: component_logpdf(KALMAN, i, theta, x), -np.inf, np.inf, points=[-0.4, -1.0])
    assert val == pytest.approx(1.0, abs=1e-8)


def test_half_normal_pushforward_is_chi_square():
    from scipy.stats import chi2

    r = np.linspace(0.05, 6, 40)
    got = component_logpdf(GAMMA_CIR, 0, ScaleTheta(1.0), r, 1)
    np.testing.assert_allclose(got, chi2.logpdf(r, 1), rtol=1e-12)


def test_mean_of_radial_component():
    # mean of nu^(0,3)_rho = rho C_3 / C_2 = 2 rho sqrt(2/pi)
    d = MixtureDistribution.single(RADIAL_OU, ScaleTheta(1.7), delta=3)
    assert d.moment(1) == pytest.approx(2 * 1.7 * math.sqrt(2 / math.pi), rel=1e-14)


def test_kalman_i0_mean_is_m():
    d = MixtureDistribution.single(KALMAN, KalmanTheta(5.0, -0.3, 2.0))
    assert d.moment(1) == pytest.approx(-0.3, abs=1e-15)
    assert d.moment(2) - d.moment(1) ** 2 == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize(
    "family,theta,delta,scale",
    [
        (KALMAN, KalmanTheta(0.5, 0.2, 1.0), None, None),
        (KALMAN, KalmanTheta(-30.0, 2.0, 0.7), None, None),
        (RADIAL_OU, ScaleTheta(1.1), 2.5, 1.1),
        (GAMMA_CIR, ScaleTheta(0.9), 3, 0.81),
    ],
)
def test_mixture_moments_match_quadrature(family, theta, delta, scale):
    d = MixtureDistribution.from_weights(family, theta, [0.2, 0.3, 0.1, 0.4], delta)
    for order in (1, 2):
        if family == KALMAN:
            val = integrate.quad(
                lambda x: x**order * d.pdf(x), -np.inf, np.inf, points=None, epsabs=1e-13, epsrel=1e-12, limit=400
            )[0]
        else:
            val = integrate.quad(lambda x: x**order * d.pdf(x), 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
        assert d.moment(order) == pytest.approx(val, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8).filter(lambda w: sum(w) > 1e-3),
    st.floats(0.2, 5.0),
)
def test_mixture_weights_normalized(weights, sigma):
    d = MixtureDistribution.from_weights(RADIAL_OU, ScaleTheta(sigma), weights, delta=2)
    assert d.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(d.weights >= 0)
