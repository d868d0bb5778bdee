"""Finite-length scaling laws for peeling decoding.

Statistics of the decodable-node process ``a(tau)`` are taken from sampled
trajectories; the block-error predictions use the standard Gaussian tail
and, for terminated coupled ensembles, a survival law over the flat
critical phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import curve_fit
from scipy.special import erfc, log_ndtr


@dataclass(frozen=True)
class ScalingFit:
    eps_star: float
    alpha: float
    theta: float | None = None
    a_crit: float | None = None
    variance: float | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.theta is not None and not self.theta > 0:
            raise ValueError("theta must be positive")
        if self.variance is not None and self.variance < 0:
            raise ValueError("variance must be non-negative")


def gaussian_q(x):
    """Standard Gaussian upper tail."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def gaussian_phi(x):
    """Standard Gaussian c.d.f."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def _as_curve(tr):
    """(tau, a) arrays of a trajectory record or of a plain pair."""
    if hasattr(tr, "tau"):
        return np.asarray(tr.tau, float), np.asarray(tr.a, float)
    tau, a = tr
    return np.asarray(tau, float), np.asarray(a, float)


def sample_at(trajectories, taus) -> np.ndarray:
    """Matrix of a(tau) per trajectory (rows); NaN once a trajectory has stopped."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    out = np.full((len(trajectories), len(taus)), np.nan)
    for k, tr in enumerate(trajectories):
        tau, a = _as_curve(tr)
        if len(tau) == 0:
            continue
        alive = taus <= tau[-1]
        out[k, alive] = np.interp(taus[alive], tau, a)
    return out


def variance_at_critical(trajectories, tau_star: float) -> float:
    """Sample variance of a(tau*) over trajectories that reach tau*."""
    vals = sample_at(trajectories, [tau_star])[:, 0]
    vals = vals[~np.isnan(vals)]
    if len(vals) < 2:
        raise ValueError("fewer than two trajectories survive to tau*")
    return float(np.var(vals, ddof=1))


def estimate_alpha(a_crit: float, variance: float, n: float, eps: float, eps_star: float) -> float:
    """Scaling parameter matching ``a_crit / sd`` to ``alpha sqrt(n) (eps* - eps)``."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    if not eps < eps_star:
        raise ValueError("eps must be below eps_star")
    return float(a_crit / math.sqrt(variance) / (math.sqrt(n) * (eps_star - eps)))


def normalized_covariance(trajectories, taus):
    """Cov[a(tau), a(xi)] / Var[a(xi)] over trajectories alive on all of ``taus``.

    Returns the (len(taus), len(taus)) matrix with column ``xi``.
    """
    X = sample_at(trajectories, taus)
    X = X[~np.isnan(X).any(axis=1)]
    if len(X) < 2:
        raise ValueError("fewer than two trajectories cover the window")
    cov = np.cov(X, rowvar=False)
    var = np.diag(cov)
    if np.any(var <= 0):
        raise ValueError("zero variance inside the window")
    return cov / var[None, :]


def fit_theta(trajectories, window: tuple[float, float], n_grid: int = 41) -> float:
    """Least-squares decay rate of ``exp(-theta |tau - xi|)`` over a critical window."""
    lo, hi = window
    if not hi > lo:
        raise ValueError("window must have positive length")
    taus = np.linspace(lo, hi, n_grid)
    rho = normalized_covariance(trajectories, taus)
    lag = np.abs(taus[:, None] - taus[None, :]).ravel()
    y = rho.ravel()
    (theta,), _ = curve_fit(lambda x, t: np.exp(-t * x), lag, y, p0=[1.0 / (hi - lo)],
                            bounds=(0.0, np.inf))
    if not theta > 0:
        raise ValueError("non-positive decay rate")
    return float(theta)


def flat_phase(tau, a, rel: float = 0.02, keep: float = 0.6) -> tuple[float, float]:
    """Middle ``keep`` fraction of the longest stretch where ``a`` is within
    ``rel`` of its median over the interior."""
    tau = np.asarray(tau, float)
    a = np.asarray(a, float)
    inner = slice(len(a) // 10, len(a) - len(a) // 10)
    ref = np.median(a[inner])
    near = np.abs(a - ref) <= rel * ref
    best, start, run = (0, 0), None, 0
    for k, flag in enumerate(near):
        if flag:
            start = k if start is None else start
            if k - start + 1 > best[1] - best[0]:
                best = (start, k + 1)
        else:
            start = None
    if best[1] - best[0] < 2:
        raise ValueError("no flat phase found")
    t0, t1 = tau[best[0]], tau[best[1] - 1]
    mid, half = 0.5 * (t0 + t1), 0.5 * keep * (t1 - t0)
    return float(mid - half), float(mid + half)


def fit_critical_point(trajectories, tau_star: float, a_crit: float, n: float,
                       eps: float, eps_star: float) -> ScalingFit:
    """Uncoupled pipeline: variance of a(tau*) at a single critical point."""
    var = variance_at_critical(trajectories, tau_star)
    alpha = estimate_alpha(a_crit, var, n, eps, eps_star)
    return ScalingFit(eps_star, alpha, None, float(a_crit), var)


def fit_critical_phase(trajectories, tau, a, n: float, eps: float, eps_star: float,
                       window: tuple[float, float] | None = None, n_grid: int = 41) -> ScalingFit:
    """Coupled pipeline over the flat critical phase of the mean curve ``(tau, a)``.

    The variance is averaged over the window and ``a_crit`` is read at its
    midpoint; theta comes from the covariance decay inside the same window.
    """
    tau = np.asarray(tau, float)
    a = np.asarray(a, float)
    window = flat_phase(tau, a) if window is None else tuple(window)
    mid = 0.5 * (window[0] + window[1])
    a_crit = float(np.interp(mid, tau, a))
    X = sample_at(trajectories, np.linspace(window[0], window[1], n_grid))
    var = float(np.nanmean(np.nanvar(X, axis=0, ddof=1)))
    theta = fit_theta(trajectories, window, n_grid)
    alpha = estimate_alpha(a_crit, var, n, eps, eps_star)
    return ScalingFit(eps_star, alpha, theta, a_crit, var)


def predict_bler_block(n: float, eps, eps_star: float, alpha: float):
    """``Q(alpha sqrt(n) (eps* - eps))``."""
    return gaussian_q(alpha * np.sqrt(n) * (eps_star - np.asarray(eps, float)))


def _survival_integral(x: float) -> float:
    """int_0^x Phi(z) exp(z^2/2) dz, with the integrand kept in log form."""
    if x <= 0:
        return 0.0

    def f(z):
        return math.exp(float(log_ndtr(z)) + 0.5 * z * z)

    val, _ = quad(f, 0.0, x, epsabs=0.0, epsrel=1e-11, limit=200)
    return val


_ASYMPTOTIC_FROM = 30.0


def _log_survival_integral(x: float) -> float:
    """Logarithm of the survival integral; asymptotic series for large ``x``."""
    if x <= 0:
        return -math.inf
    if x < _ASYMPTOTIC_FROM:
        return math.log(_survival_integral(x))
    # Phi(z) = 1 to double precision here; Laplace expansion of int e^{z^2/2}
    return 0.5 * x * x - math.log(x) + math.log1p(1 / x**2 + 3 / x**4 + 15 / x**6)


def predict_bler_sc(M: float, L: float, eps, eps_star: float, alpha: float, theta: float):
    """Block error probability of a terminated coupled ensemble.

    ``1 - exp(-eps L / ((2 pi / theta) I))`` with ``I`` the survival integral
    up to ``alpha sqrt(M) (eps* - eps)``; at or above ``eps*`` the integral
    vanishes and the prediction is 1.
    """
    eps_arr = np.atleast_1d(np.asarray(eps, float))
    out = np.empty(len(eps_arr))
    for k, e in enumerate(eps_arr):
        x = alpha * math.sqrt(M) * (eps_star - e)
        log_i = _log_survival_integral(x)
        if log_i == -math.inf:
            out[k] = 1.0
        else:
            rate = e * L * theta / (2 * math.pi) * math.exp(-log_i)
            out[k] = -math.expm1(-rate)
    return out[0] if np.ndim(eps) == 0 else out
