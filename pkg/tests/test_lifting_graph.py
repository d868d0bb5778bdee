import io
from dataclasses import replace

import numpy as np
import pytest

from scgldpc.lifting_graph import dump, lift, verify
from scgldpc.protograph import block_hamming7, builtin


@pytest.mark.parametrize("name, M", [("A7", 1), ("A7", 17), ("C7", 8), ("B14", 5), ("B14P", 3)])
def test_lift_is_clean(name, M):
    p = builtin(name).terminate(4)
    g = lift(p, M, seed=3)
    rep = verify(g)
    assert rep.ok, str(rep)
    assert g.n_edges == M * p.base.sum()
    assert np.array_equal(np.diff(g.chk_ptr), np.repeat(p.check_degrees, M))
    assert np.array_equal(np.bincount(g.chk_var, minlength=g.n_vars), np.repeat(p.var_degrees, M))


def test_m1_is_protograph():
    p = block_hamming7()
    g = lift(p, 1, 0)
    for i in range(p.n_c):
        want = [j for j in range(p.n_v) for _ in range(p.base[i, j])]
        assert g.chk_var[g.chk_ptr[i]:g.chk_ptr[i + 1]].tolist() == want


def test_b14_double_edges_distinct():
    g = lift(builtin("B14").block(), 100, 1)
    ec = g.edge_check()
    for v in range(g.n_vars):
        es = g.var_edge[g.var_ptr[v]:g.var_ptr[v + 1]]
        assert len(es) == 2 and len(set(ec[es])) == 2


def test_multi_edge_needs_m():
    with pytest.raises(ValueError):
        lift(builtin("B14").block(), 1, 0)
    with pytest.raises(ValueError):
        lift(block_hamming7(), 0, 0)


def test_large_terminated_lift():
    g = lift(builtin("A7").terminate(50), 1000, 0)
    assert g.n_vars == 350_000
    assert np.all(np.bincount(g.chk_var, minlength=g.n_vars) == 2)
    assert verify(g).ok


def test_parallel_edge_reported():
    g = lift(block_hamming7(), 6, 2)
    chk_var = g.chk_var.copy()
    chk_var[1] = chk_var[0]
    bad = replace(g, chk_var=chk_var)
    rep = verify(bad)
    assert not rep.ok
    assert any("parallel edge" in v for v in rep.violations)


def test_seed_determinism():
    p = builtin("C7").terminate(5)
    a, b = lift(p, 40, 9), lift(p, 40, 9)
    assert np.array_equal(a.chk_var, b.chk_var) and np.array_equal(a.var_edge, b.var_edge)
    assert not np.array_equal(a.chk_var, lift(p, 40, 10).chk_var)


def test_marginal_uniformity():
    p = block_hamming7()
    M, n_seeds = 5, 3000
    hits = np.zeros((p.n_c * M, M))
    for s in range(n_seeds):
        g = lift(p, M, s)
        # copy index of the variable at slot 0 of every constraint node
        hits[np.arange(g.n_checks), g.chk_var[g.chk_ptr[:-1]] % M] += 1
    freq = hits / n_seeds
    sigma = np.sqrt((1 / M) * (1 - 1 / M) / n_seeds)
    assert np.all(np.abs(freq - 1 / M) < 4 * sigma)


def test_dump_format():
    g = lift(block_hamming7(), 2, 0)
    buf = io.StringIO()
    dump(g, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("# lifted graph M=2")
    assert len(lines) == 1 + g.n_vars + g.n_checks
    assert lines[1].startswith("v 0 type=0")
    assert "code=hamming7" in lines[-1]
