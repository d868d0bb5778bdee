"""Block vs coupled thresholds of the (2,7) Hamming GLDPC ensemble on the BEC.

Run: python demos/thresholds.py   (about a minute)
"""
import numpy as np

from scgldpc.density_evolution import DensityEvolution, bp_exit_curve, map_threshold_bound
from scgldpc.protograph import builtin, design_rate

spec = builtin("A7")
block = spec.block()

eps_bp = DensityEvolution(block).threshold(1e-5)
curve = bp_exit_curve(block, np.linspace(0, 1, 201))
print(f"block: rate {design_rate(block)}  BP {eps_bp:.4f}  MAP bound {map_threshold_bound(curve):.4f}")

# coupling pulls the BP threshold up to the MAP bound; short chains pay in rate
for L in (5, 10, 20):
    p = spec.terminate(L)
    th = DensityEvolution(p).threshold(1e-4, lo=0.85, hi=1.0)
    print(f"terminated L={L:3d}: rate {float(design_rate(p)):.4f}  BP {th:.4f}")
