from fractions import Fraction

import numpy as np
import pytest

from scgldpc import density_evolution as de_mod
from scgldpc.density_evolution import (
    DensityEvolution, ExitCurve, bp_exit_curve, bp_threshold, check_update, de_iterate,
    map_threshold_bound,
)
from scgldpc.gf2_codes import BITWISE_MAP, FULL_ML, hamming_code, spc_code
from scgldpc.protograph import GldpcProtograph, block_hamming7

H7 = hamming_code(3)


def spc_protograph(dv, dc):
    rows = dv
    cols = dc
    base = np.ones((rows, cols), dtype=int)
    return GldpcProtograph(base, (spc_code(dc),) * rows, (tuple(range(dc)),) * rows)


@pytest.mark.parametrize("d", [2, 3, 5, 8])
def test_spc_reduction_random(d):
    rng = np.random.default_rng(d)
    p = rng.random((10_000, d))
    q = check_update(spc_code(d), p)
    for b in range(d):
        other = np.delete(p, b, axis=1)
        want = 1.0 - np.prod(1.0 - other, axis=1)
        np.testing.assert_allclose(q[:, b], want, rtol=0, atol=1e-13)


@pytest.mark.parametrize("d", [3, 6, 7])
def test_spc_equal_inputs(d):
    for p in (0.1, 0.5, 0.9):
        np.testing.assert_allclose(check_update(spc_code(d), np.full(d, p)), 1 - (1 - p) ** (d - 1))


@pytest.mark.parametrize("code", [spc_code(4), H7, hamming_code(4)], ids=lambda c: c.name)
def test_check_update_extremes(code):
    d = code.n_c_len
    assert np.all(check_update(code, np.zeros(d)) == 0)
    np.testing.assert_allclose(check_update(code, np.ones(d)), 1.0)


def test_check_update_degree_mismatch():
    with pytest.raises(ValueError):
        check_update(H7, np.zeros(6))


def test_bitwise_map_never_worse_than_full_ml():
    rng = np.random.default_rng(5)
    p = rng.random((2000, 7))
    assert np.all(check_update(H7, p, BITWISE_MAP) <= check_update(H7, p, FULL_ML) + 1e-15)


def test_de_examples():
    p = block_hamming7()
    ok, st = de_iterate(p, 0.0)
    assert ok and st.iteration == 1 and not st.p.any()
    assert de_iterate(p, 0.70)[0]
    assert not de_iterate(p, 0.80)[0]


def test_de_monotone_iterates():
    de = DensityEvolution(block_hamming7())
    prev = None
    for k in range(1, 40):
        st = de.iterate(0.74, max_iter=k, tol=0.0)
        if prev is not None:
            assert np.all(st.p <= prev + 1e-15)
        prev = st.p


def test_block_bp_threshold():
    assert bp_threshold(block_hamming7(), tol=1e-4) == pytest.approx(0.756, abs=1e-3)


def scalar_threshold(dv, dc, tol=1e-5):
    def ok(e):
        x = e
        for _ in range(100_000):
            nx = e * (1 - (1 - x) ** (dc - 1)) ** (dv - 1)
            if nx < 1e-10:
                return True
            if abs(nx - x) < 1e-15:
                return False
            x = nx
        return False

    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return 0.5 * (lo + hi)


def test_spc_36_threshold_matches_scalar_recursion():
    want = scalar_threshold(3, 6)
    got = bp_threshold(spc_protograph(3, 6), tol=1e-5)
    assert got == pytest.approx(want, abs=2e-5)
    assert got == pytest.approx(0.4294, abs=1e-3)


def test_policy_monotone_with_weakened_tables(monkeypatch):
    p = block_hamming7()
    strong = bp_threshold(p, tol=1e-4, policy=BITWISE_MAP)
    assert bp_threshold(p, tol=1e-4, policy=FULL_ML) <= strong + 1e-4
    real = de_mod._unrecovered_tables

    def weakened(code, policy):
        u = real(code, policy).copy()
        n = code.n_c_len
        masks = np.arange(1 << n)
        for b in range(n):
            w = np.array([bin(m | (1 << b)).count("1") for m in masks])
            u[w >= 3, b] = 1.0
        return u

    monkeypatch.setattr(de_mod, "_unrecovered_tables", weakened)
    assert bp_threshold(p, tol=1e-4) <= strong + 1e-4


def test_exit_curve_and_map_bound():
    p = block_hamming7()
    grid = np.linspace(0.0, 1.0, 201)
    curve = bp_exit_curve(p, grid)
    assert np.all((curve.h_bp >= 0) & (curve.h_bp <= 1))
    assert np.all(np.diff(curve.h_bp) >= -1e-12)
    assert np.all(curve.h_bp[grid < 0.755] == 0)
    assert curve.h_bp[-1] == pytest.approx(1.0)
    assert curve.h_bp[grid > 0.757][0] > 0.3  # jump at the BP threshold
    assert map_threshold_bound(curve) == pytest.approx(0.856, abs=2e-3)


def test_map_bound_constant_curve():
    grid = np.linspace(0, 1, 11)
    c = ExitCurve(grid, np.ones_like(grid), Fraction(1, 7))
    assert map_threshold_bound(c) == pytest.approx(1 - 1 / 7)
    with pytest.raises(ValueError):
        map_threshold_bound(ExitCurve(grid, np.zeros_like(grid), Fraction(1, 7)))
    with pytest.raises(ValueError):
        ExitCurve(grid[::-1], grid, Fraction(1, 2))
