"""Peeling decoder simulation against the scaling-law prediction (block ensemble).

Estimates eps* and alpha from the mean evolution plus a small batch of
trajectories, then overlays the predicted block error rate on fresh
simulations.  Run: python demos/finite_length.py   (about ten minutes)
"""
from scgldpc import graph_evolution as ge
from scgldpc import peeling_sim as ps
from scgldpc import scaling_law as sl
from scgldpc.protograph import block_hamming7

p = block_hamming7()
M = 2000
n = M * p.n_v

eps_star = ge.gpd_threshold(p, tol=1e-5, lo=0.6, hi=0.8)
eps = 0.67
c = ge.evolve(p, eps)
k = c.critical_index()
print(f"eps*={eps_star:.4f}  critical point tau={c.tau[k]:.3f} a={c.a[k]:.4f} v={c.v[k]:.3f}")

est = ps.monte_carlo(p, M, eps, 300, base_seed=1, keep_trajectories=True)
fit = sl.fit_critical_point(est.trajectories, c.tau[k], c.a[k], n, eps, eps_star)
print(f"alpha={fit.alpha:.3f}")

for e in (0.68, 0.69, 0.70):
    sim = ps.monte_carlo(p, M, e, 1000, base_seed=2)
    pred = sl.predict_bler_block(n, e, eps_star, fit.alpha)
    print(f"eps={e:.2f} simulated {sim.bler:.4f} [{sim.ci_low:.4f}, {sim.ci_high:.4f}]  predicted {pred:.4f}")
