import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.special import comb

from scgldpc import peeling_sim as ps
from scgldpc.density_evolution import DensityEvolution
from scgldpc.gf2_codes import FULL_ML, spc_code
from scgldpc.graph_evolution import (
    PER_COPY, PER_POSITION, PER_VARIABLE, drift, evolve, extrapolated_threshold, gpd_threshold,
    init_means, is_coupled,
)
from scgldpc.protograph import GldpcProtograph, block_hamming7, builtin, design_rate
from scgldpc.scaling_law import sample_at


def spc36():
    return GldpcProtograph(np.ones((3, 6), int), (spc_code(6),) * 3, (tuple(range(6)),) * 3)


def test_init_means():
    p = block_hamming7()
    st = init_means(p, 0.69)
    assert st.v / p.n_v == pytest.approx(0.69)
    assert st.r.sum() / p.n_v == pytest.approx(p.n_c / p.n_v)
    full = init_means(p, 1.0)
    top = full.layout.mask == (1 << 7) - 1
    assert np.all(full.r[~top] == 0) and np.all(full.r[top] == 1)


def test_drift_bookkeeping():
    p = builtin("A7").terminate(4)
    st = init_means(p, 0.8)
    dr, dl = drift(st)
    lay = st.layout
    dec = np.where(lay.decodable, st.r, 0)
    mean_weight = (dec * lay.weight).sum() / dec.sum()
    # v decreases by the expected mask weight of the removed node
    assert dl.sum() == pytest.approx(-mean_weight)
    # exactly one constraint node leaves per step
    assert dr.sum() == pytest.approx(-1.0)
    # degree-2 variables: each removed variable detaches exactly one other slot, so
    # the edge count drops by twice the variables removed
    assert (dr * lay.weight).sum() == pytest.approx(2 * dl.sum())


def test_drift_halted():
    p = block_hamming7()
    st = init_means(p, 1.0)
    with pytest.raises(ValueError):
        drift(st)


def classical_peeling_ode(eps, dv=3, dc=6, t_end=None):
    """Degree-grouped peeling evolution of a (dv, dc) LDPC ensemble, per check group."""
    n_c = dv  # checks per copy for dv rows of a dv x dc all-ones base
    R0 = np.array([n_c * comb(dc, k) * eps ** k * (1 - eps) ** (dc - k) for k in range(dc + 1)])
    k = np.arange(dc + 1)

    def rhs(t, y):
        R = np.maximum(y[:-1], 0)
        E = (k * R).sum()
        d = np.zeros(dc + 1)
        d[1] -= 1
        if E > 0:
            flow = (dv - 1) * k * R / E
            d -= flow
            d[:-1] += flow[1:]
        return np.append(d, -1.0)

    def stop(t, y):
        return y[1] - 1e-9
    stop.terminal = True
    sol = solve_ivp(rhs, (0, t_end or 10.0), np.append(R0, dc * eps), events=stop,
                    rtol=1e-10, atol=1e-13, dense_output=True)
    return sol


@pytest.mark.parametrize("eps", [0.3, 0.4, 0.45])
def test_spc_matches_classical_peeling(eps):
    c = evolve(spc36(), eps, per=PER_COPY)
    sol = classical_peeling_ode(eps, t_end=c.tau[-1])
    t = c.tau[c.tau < min(c.tau[-1], sol.t[-1]) * 0.999]
    ref = sol.sol(t)
    np.testing.assert_allclose(c.a[:len(t)], ref[1], atol=1e-6)
    np.testing.assert_allclose(c.v[:len(t)], ref[-1], atol=1e-6)
    assert c.success == (eps < 0.4294)


def test_block_critical_point():
    c = evolve(block_hamming7(), 0.69)
    assert c.success
    k = c.critical_index()
    assert 0 < k < len(c.tau) - 1
    assert c.v[k] == pytest.approx(0.43, abs=0.02)
    assert c.v[0] == pytest.approx(0.69)
    assert np.all(np.diff(c.v) <= 1e-12)
    # a single interior local minimum of a
    a = c.a[c.v > 0.01 * c.v[0]]
    mins = np.nonzero((a[1:-1] <= a[:-2]) & (a[1:-1] <= a[2:]))[0]
    assert len(mins) == 1


def test_zero_erasure():
    c = evolve(block_hamming7(), 0.0)
    assert c.success and len(c.tau) == 1 and c.v[0] == 0 and c.a[0] == 0


def test_tolerance_refinement():
    p = block_hamming7()
    a = evolve(p, 0.69, rtol=1e-7)
    b = evolve(p, 0.69, rtol=1e-10, atol=1e-14, max_step=2e-3, n_points=0)
    keep = a.tau < 0.99 * b.tau[-1]
    assert np.max(np.abs(a.a[keep] - np.interp(a.tau[keep], b.tau, b.a))) < 1e-6


def test_units():
    p = block_hamming7()
    n = evolve(p, 0.6, per=PER_VARIABLE)
    m = evolve(p, 0.6, per=PER_COPY)
    np.testing.assert_allclose(m.tau, n.tau * p.n_v, rtol=1e-12)
    np.testing.assert_allclose(m.a, n.a * p.n_v, rtol=1e-12)
    with pytest.raises(ValueError):
        evolve(p, 0.6, per="x")
    # a block protograph is a single position
    b = evolve(p, 0.6, per=PER_POSITION)
    np.testing.assert_array_equal(b.a, n.a)


def test_position_units_on_coupled_chain():
    p = builtin("A7").terminate(4)
    m = evolve(p, 0.7, per=PER_COPY)
    q = evolve(p, 0.7, per=PER_POSITION)
    np.testing.assert_allclose(q.tau, m.tau / 7, rtol=1e-12)
    np.testing.assert_allclose(q.v[0], 0.7 * 4, rtol=1e-12)


def test_block_gpd_threshold():
    p = block_hamming7()
    th = gpd_threshold(p, tol=1e-4, lo=0.6, hi=0.8)
    assert th == pytest.approx(0.7025, abs=2e-3)
    assert th <= 1 - float(design_rate(p))
    assert evolve(p, th - 2e-3).success and not evolve(p, th + 2e-3).success


@pytest.mark.parametrize("M", [500, 2000])
def test_monte_carlo_concentration(M):
    p, eps = block_hamming7(), 0.69
    c = evolve(p, eps)
    grid = np.linspace(0, c.tau[c.critical_index()], 60)
    est = ps.monte_carlo(p, M, eps, 200, base_seed=3, keep_trajectories=True)
    mean = np.nanmean(sample_at(est.trajectories, grid), axis=0)
    n = M * p.n_v
    assert np.max(np.abs(mean - np.interp(grid, c.tau, c.a))) < 1.0 / np.sqrt(n)


@pytest.mark.parametrize("deg", [2, 3])
def test_extrapolated_threshold_block(deg):
    p = block_hamming7()
    direct = gpd_threshold(p, tol=1e-5, lo=0.6, hi=0.8)
    assert extrapolated_threshold(p, [0.67, 0.68, 0.69, 0.70], deg=deg) == pytest.approx(direct, abs=2e-4)


def test_extrapolated_threshold_coupled_matches_density_evolution():
    # needs a chain long enough for a developed flat phase
    p = builtin("A7").terminate(20)
    assert is_coupled(p) and not is_coupled(block_hamming7())
    de = DensityEvolution(p, FULL_ML).threshold(2e-5, lo=0.82, hi=0.84)
    assert extrapolated_threshold(p, [0.79, 0.80, 0.81, 0.82]) == pytest.approx(de, abs=3e-4)


def test_extrapolated_threshold_rejects_points_above():
    with pytest.raises(ValueError):
        extrapolated_threshold(block_hamming7(), [0.69, 0.70, 0.72])
    with pytest.raises(ValueError):
        extrapolated_threshold(block_hamming7(), [0.69, 0.70])
