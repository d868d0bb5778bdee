import math

import numpy as np
import pytest
from scipy.integrate import fixed_quad
from scipy.stats import norm

from scgldpc.scaling_law import (
    ScalingFit, _survival_integral, estimate_alpha, fit_critical_phase, fit_critical_point,
    fit_theta, flat_phase, gaussian_phi,
    gaussian_q, normalized_covariance, predict_bler_block, predict_bler_sc, sample_at,
    variance_at_critical,
)


def ar_trajectories(theta, n_traj=600, dt=0.05, length=20.0, seed=0):
    """Stationary Gaussian AR(1) paths with correlation exp(-theta |lag|)."""
    rng = np.random.default_rng(seed)
    tau = np.arange(0.0, length + dt / 2, dt)
    rho = math.exp(-theta * dt)
    x = np.empty((n_traj, len(tau)))
    x[:, 0] = rng.standard_normal(n_traj)
    for k in range(1, len(tau)):
        x[:, k] = rho * x[:, k - 1] + math.sqrt(1 - rho * rho) * rng.standard_normal(n_traj)
    return [(tau, 3.0 + 0.1 * row) for row in x]


def test_theta_recovered_from_ar_process():
    trajs = ar_trajectories(0.5)
    assert fit_theta(trajs, (4.0, 16.0)) == pytest.approx(0.5, abs=0.05)


def test_normalized_covariance_diagonal():
    trajs = ar_trajectories(1.0, n_traj=100)
    rho = normalized_covariance(trajs, np.linspace(2, 8, 13))
    np.testing.assert_allclose(np.diag(rho), 1.0)


def test_variance_gaussian():
    rng = np.random.default_rng(4)
    sd, n = 0.3, 2000
    vals = rng.normal(1.0, sd, n)
    trajs = [(np.array([0.0, 2.0]), np.array([v, v])) for v in vals]
    got = variance_at_critical(trajs, 1.0)
    se = sd ** 2 * math.sqrt(2 / (n - 1))
    assert abs(got - sd ** 2) < 3 * se


def test_variance_identical_and_survivors():
    tr = [(np.array([0.0, 1.0]), np.array([0.2, 0.1]))] * 5
    assert variance_at_critical(tr, 0.5) == 0.0
    short = [(np.array([0.0, 0.3]), np.array([0.2, 0.1]))] * 5
    with pytest.raises(ValueError):
        variance_at_critical(short + tr[:1], 0.5)


def test_sample_at_marks_stopped():
    X = sample_at([(np.array([0.0, 1.0]), np.array([1.0, 0.0]))], [0.5, 2.0])
    assert X[0, 0] == 0.5 and np.isnan(X[0, 1])


def test_alpha_identity_and_consistency():
    n, eps, es = 28000, 0.66, 0.7025
    var = 2.5e-6
    a_crit = math.sqrt(var) * math.sqrt(n) * (es - eps)
    assert estimate_alpha(a_crit, var, n, eps, es) == pytest.approx(1.0)
    a_crit = 0.02
    alpha = estimate_alpha(a_crit, var, n, eps, es)
    assert float(gaussian_q(a_crit / math.sqrt(var))) == pytest.approx(
        float(predict_bler_block(n, eps, es, alpha)), rel=1e-12)
    with pytest.raises(ValueError):
        estimate_alpha(a_crit, 0.0, n, eps, es)
    with pytest.raises(ValueError):
        estimate_alpha(a_crit, var, n, es, es)


def test_gaussian_functions():
    assert float(gaussian_q(0.0)) == 0.5
    x = np.linspace(-5, 5, 41)
    np.testing.assert_allclose(gaussian_q(x), norm.sf(x), rtol=1e-12)
    np.testing.assert_allclose(gaussian_phi(x), norm.cdf(x), rtol=1e-12)


def test_block_prediction_limits():
    assert float(predict_bler_block(1000, 0.7025, 0.7025, 1.8)) == 0.5
    assert float(predict_bler_block(1e12, 0.6, 0.7025, 1.8)) == 0.0
    ns = [1e3, 1e4, 1e5]
    vals = [float(predict_bler_block(n, 0.69, 0.7025, 1.8)) for n in ns]
    assert vals == sorted(vals, reverse=True)
    eps = np.linspace(0.6, 0.7, 11)
    assert np.all(np.diff(predict_bler_block(28000, eps, 0.7025, 1.8)) > 0)


def test_sc_prediction_limits_and_monotonicity():
    kw = dict(eps_star=0.8, alpha=5.66, theta=0.87)
    assert predict_bler_sc(1000, 50, 0.8, **kw) == 1.0
    assert predict_bler_sc(1000, 50, 0.7999999, **kw) == pytest.approx(1.0, abs=1e-5)
    assert predict_bler_sc(1e8, 50, 0.75, **kw) < 1e-12
    by_L = [predict_bler_sc(1000, L, 0.78, **kw) for L in (10, 50, 100)]
    assert by_L == sorted(by_L)
    by_M = [predict_bler_sc(M, 50, 0.78, **kw) for M in (250, 500, 1000)]
    assert by_M == sorted(by_M, reverse=True)
    arr = predict_bler_sc(500, 50, np.array([0.77, 0.78]), **kw)
    assert arr.shape == (2,) and arr[0] < arr[1]


@pytest.mark.parametrize("x", [0.1, 1.0, 3.0, 6.0])
def test_survival_integral_quadrature(x):
    def f(z):
        return norm.cdf(z) * np.exp(z * z / 2)
    ref_n = fixed_quad(f, 0, x, n=200)[0]
    ref_2n = fixed_quad(f, 0, x, n=400)[0]
    assert ref_2n == pytest.approx(ref_n, rel=1e-8)
    assert _survival_integral(x) == pytest.approx(ref_2n, rel=1e-8)
    assert _survival_integral(-1.0) == 0.0


def test_flat_phase():
    tau = np.linspace(0, 100, 1001)
    a = np.where((tau > 20) & (tau < 80), 0.5, 0.5 + 0.05 * np.minimum(abs(tau - 20), abs(tau - 80)))
    lo, hi = flat_phase(tau, a)
    assert lo == pytest.approx(32, abs=0.5) and hi == pytest.approx(68, abs=0.5)


def test_scaling_fit_validation():
    ScalingFit(0.8, 5.66, 0.87, 0.74, 1e-3)
    for bad in (dict(alpha=0.0), dict(alpha=1.0, theta=-1.0), dict(alpha=1.0, variance=-1.0)):
        with pytest.raises(ValueError):
            ScalingFit(0.8, **bad)


def test_log_integral_asymptotic_continuity():
    from scgldpc.scaling_law import _log_survival_integral
    x = 30.0
    exact = math.log(_survival_integral(x - 1e-9))
    assert _log_survival_integral(x) == pytest.approx(exact, rel=1e-9)


def test_critical_phase_pipeline():
    trajs = ar_trajectories(0.5, seed=3)
    tau = np.linspace(0, 20, 401)
    mean = np.where((tau > 2) & (tau < 18), 3.0, 5.0)
    f = fit_critical_phase(trajs, tau, mean, n=2000, eps=0.75, eps_star=0.8)
    assert f.theta == pytest.approx(0.5, abs=0.06)
    assert f.variance == pytest.approx(0.01, rel=0.15)
    assert f.a_crit == 3.0
    assert f.alpha * math.sqrt(2000) * 0.05 * math.sqrt(f.variance) == pytest.approx(3.0)


def test_critical_point_pipeline():
    trajs = ar_trajectories(1.0, n_traj=200, seed=5)
    f = fit_critical_point(trajs, 7.0, 3.0, n=100, eps=0.6, eps_star=0.7)
    assert f.theta is None
    assert f.variance == variance_at_critical(trajs, 7.0)
    assert f.alpha == estimate_alpha(3.0, f.variance, 100, 0.6, 0.7)
