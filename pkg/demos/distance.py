"""Spectral shape of the block ensemble and its typical minimum distance.

Run: python demos/distance.py   (a few minutes)
"""
import numpy as np

from scgldpc.protograph import block_hamming7
from scgldpc.spectral_shape import random_code_delta_min, spectral_shape

p = block_hamming7()
curve = spectral_shape(p, np.linspace(0.02, 0.5, 25), n_starts=4)
for d, r in curve.samples:
    print(f"{d:.2f} {r:+.4f}")
print("delta_min", curve.delta_min)
print("random linear code of the same rate:", round(random_code_delta_min(1 / 7), 4))
