import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from conjfilter import (
    KALMAN,
    KalmanModel,
    KalmanTheta,
    MixtureDistribution,
    SingularParameterError,
    component_logpdf,
    laplace_transform,
)
from conjfilter.model_kalman import gaussian_push_log_weights


def comp_pdf(i, theta, x):
    return np.exp(component_logpdf(KALMAN, i, theta, x))


def mixture_pdf(theta, weights, x):
    return sum(w * comp_pdf(k, theta, x) for k, w in enumerate(weights))


# -- update ---------------------------------------------------------------------

def test_update_symmetric_case():
    model = KalmanModel(h=1.0, gamma2=1.0, a=1.0, beta2=1.0)
    i, th = model.update_component(0, KalmanTheta(0.0, 0.0, 1.0), 0.0)
    assert (i, th.m, th.sigma2) == (0, 0.0, 0.5)


def test_update_frozen_values():
    model = KalmanModel(h=1.0, gamma2=1.0, a=1.0, beta2=1.0)
    _, th = model.update_component(0, KalmanTheta(0.0, 0.0, 1.0), 2.0)
    assert th.m == pytest.approx(1.0, abs=1e-15)
    assert th.sigma2 == pytest.approx(0.5, abs=1e-15)


def test_update_keeps_index_and_shift():
    model = KalmanModel(h=2.0, gamma2=1.0, a=1.0, beta2=1.0)
    i, th = model.update_component(3, KalmanTheta(1.0, 2.0, 4.0), 1.0)
    assert i == 3 and th.mu == 1.0
    assert th.m == pytest.approx(10 / 17, rel=1e-15)
    assert th.sigma2 == pytest.approx(4 / 17, rel=1e-15)


@pytest.mark.parametrize("i", range(6))
def test_update_matches_grid_bayes(i):
    model = KalmanModel(h=2.0, gamma2=1.0, a=0.9, beta2=0.5)
    theta = KalmanTheta(1.0, 2.0, 4.0)
    y = 1.0
    x = np.linspace(-12, 14, 20001)
    dx = x[1] - x[0]
    joint = comp_pdf(i, theta, x) * np.exp(model.obs_logpdf(x, y))
    post = joint / (joint.sum() * dx)
    _, th = model.update_component(i, theta, y)
    np.testing.assert_allclose(comp_pdf(i, th, x), post, atol=1e-8)


# -- prediction -----------------------------------------------------------------

def test_predict_gaussian_component():
    model = KalmanModel(h=1.0, gamma2=1.0, a=0.5, beta2=2.0)
    tau, w = model.predict_component(0, KalmanTheta(3.0, 1.2, 0.8))
    assert tau.m == pytest.approx(0.6)
    assert tau.sigma2 == pytest.approx(2.0 + 0.25 * 0.8)
    np.testing.assert_array_equal(w, [1.0])


@pytest.mark.parametrize("i", [1, 2, 5])
def test_predict_centered_gives_binomial(i):
    from scipy.stats import binom

    a, beta2, s2 = 0.7, 0.4, 1.5
    model = KalmanModel(h=1.0, gamma2=1.0, a=a, beta2=beta2)
    _, w = model.predict_component(i, KalmanTheta(0.8, -0.8, s2))
    s2_bar = beta2 + a * a * s2
    np.testing.assert_allclose(w, binom.pmf(np.arange(i + 1), i, a * a * s2 / s2_bar), rtol=1e-12)


def test_predict_worked_example():
    model = KalmanModel(h=1.0, gamma2=1.0, a=1.0, beta2=1.0)
    theta = KalmanTheta(0.0, 1.0, 1.0)
    tau, w = model.predict_component(1, theta)
    assert tau.sigma2 == 2.0 and tau.mu == 1.0 and tau.m == 1.0
    # B_1 = 1 + s^2 / (C_2 s2) = 2; alpha_0 = beta2 / (B_1 s2_bar) = 1/4
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(w, [0.25, 0.75], rtol=1e-14)
    x = np.linspace(-6, 8, 57)
    expect = [
        integrate.quad(lambda u: comp_pdf(1, theta, u) * np.exp(model.transition_logpdf(u, xn)), -np.inf, np.inf)[0]
        for xn in x
    ]
    np.testing.assert_allclose(mixture_pdf(tau, w, x), expect, atol=1e-7)


@pytest.mark.parametrize("i", range(6))
def test_predict_pushforward_matches_quadrature(i):
    model = KalmanModel(h=1.0, gamma2=1.0, a=-0.6, beta2=0.7)
    theta = KalmanTheta(0.3, 1.1, 0.9)
    tau, w = model.predict_component(i, theta)
    x = np.linspace(-6, 6, 25)
    expect = [
        integrate.quad(lambda u: comp_pdf(i, theta, u) * np.exp(model.transition_logpdf(u, xn)), -np.inf, np.inf,
                       epsabs=1e-13, epsrel=1e-12)[0]
        for xn in x
    ]
    np.testing.assert_allclose(mixture_pdf(tau, w, x), expect, atol=1e-7)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 10),
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.floats(0.1, 4),
    st.floats(0.05, 2).flatmap(lambda a: st.sampled_from([a, -a])),
    st.floats(0.1, 3),
)
def test_predict_weights_sum_to_one(i, mu, m, s2, a, beta2):
    model = KalmanModel(h=1.0, gamma2=1.0, a=a, beta2=beta2)
    _, w = model.predict_component(i, KalmanTheta(mu, m, s2))
    assert w.size == i + 1
    assert w.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(w >= 0)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 4), st.floats(0.05, 2), st.floats(0.1, 3))
def test_shift_consistency_identity(mu, m, s2, a, beta2):
    model = KalmanModel(h=1.0, gamma2=1.0, a=a, beta2=beta2)
    tau, _ = model.predict_component(2, KalmanTheta(mu, m, s2))
    lhs = tau.m + tau.mu
    rhs = a * (m + mu) / (1 - beta2 / tau.sigma2)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_zero_gain_is_singular_for_shifted_components():
    model = KalmanModel(h=1.0, gamma2=1.0, a=0.0, beta2=1.0)
    theta = KalmanTheta(0.5, 1.0, 1.0)
    with pytest.raises(SingularParameterError):
        model.predict_component(1, theta)
    tau, w = model.predict_component(0, theta)
    assert tau.m == 0.0 and tau.sigma2 == 1.0 and list(w) == [1.0]
    with pytest.raises(SingularParameterError):
        KalmanModel(h=0.0, gamma2=1.0, a=1.0, beta2=1.0).marginal_component(2, theta, 0.3)


def test_push_weights_log_domain_for_large_index():
    lw = gaussian_push_log_weights(150, KalmanTheta(0.2, 0.5, 1.0), 0.9, 0.3)
    assert np.all(np.isfinite(lw))
    assert np.exp(lw).sum() == pytest.approx(1.0, abs=1e-10)


# -- marginal -------------------------------------------------------------------

def test_marginal_gaussian_case():
    model = KalmanModel(h=1.5, gamma2=0.7, a=1.0, beta2=1.0)
    theta = KalmanTheta(4.0, 0.3, 1.2)
    val = model.marginal_component(0, theta, 0.9)
    assert val == pytest.approx(norm.logpdf(0.9, 1.5 * 0.3, math.sqrt(0.7 + 2.25 * 1.2)), rel=1e-14)


@pytest.mark.parametrize("i", range(6))
def test_marginal_matches_quadrature(i):
    model = KalmanModel(h=-1.3, gamma2=0.6, a=1.0, beta2=1.0)
    theta = KalmanTheta(0.7, -0.2, 1.4)
    for y in (-3.0, -0.5, 0.0, 1.7):
        expect = integrate.quad(
            lambda u: comp_pdf(i, theta, u) * np.exp(model.obs_logpdf(u, y)), -np.inf, np.inf,
            epsabs=1e-14, epsrel=1e-12,
        )[0]
        assert np.exp(model.marginal_component(i, theta, y)) == pytest.approx(expect, abs=1e-8)


def test_marginal_centered_integrates_to_one():
    model = KalmanModel(h=0.8, gamma2=0.5, a=1.0, beta2=1.0)
    theta = KalmanTheta(1.0, -1.0, 2.0)
    val = integrate.quad(lambda y: np.exp(model.marginal_component(1, theta, y)), -np.inf, np.inf)[0]
    assert val == pytest.approx(1.0, abs=1e-8)


# -- weak convergence and Laplace transform -------------------------------------

@pytest.mark.parametrize("i", [1, 3])
def test_component_concentrates_at_m(i):
    for sigma in (1e-2, 1e-3, 1e-4):
        d = MixtureDistribution.single(KALMAN, KalmanTheta(0.5, 1.0, sigma * sigma), index=i)
        assert abs(d.moment(1) - 1.0) <= 5 * sigma


def test_laplace_at_zero():
    assert laplace_transform(2, KalmanTheta(0.3, 1.0, 2.0), 0.0) == pytest.approx(1.0, abs=1e-15)


def test_laplace_gaussian_case():
    assert laplace_transform(0, KalmanTheta(9.0, 0.4, 2.5), 0.7) == pytest.approx(
        math.exp(0.7 * 0.4 + 0.5 * 0.49 * 2.5), rel=1e-14
    )


@pytest.mark.parametrize("i", range(4))
@pytest.mark.parametrize("lam", [-0.8, 0.3, 1.1])
def test_laplace_matches_quadrature(i, lam):
    theta = KalmanTheta(0.4, -0.2, 1.7)
    expect = integrate.quad(lambda u: np.exp(lam * u) * comp_pdf(i, theta, u), -40, 40, points=[-0.4, -0.2], epsrel=1e-12, limit=200)[0]
    assert laplace_transform(i, theta, lam) == pytest.approx(expect, rel=1e-9)


def test_stationary_requires_contraction():
    with pytest.raises(ValueError):
        KalmanModel(h=1.0, gamma2=1.0, a=1.0, beta2=1.0).stationary()
    model = KalmanModel(h=1.0, gamma2=1.0, a=0.5, beta2=0.75)
    st_ = model.stationary()
    assert st_.theta.sigma2 == pytest.approx(1.0)
    tau, _ = model.predict_component(0, st_.theta)
    assert tau.sigma2 == pytest.approx(st_.theta.sigma2, rel=1e-12)
