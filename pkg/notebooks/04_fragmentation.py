"""
Boundary-length fragmentation
=============================

The area functional as a martingale, the root of the area-variation
identity, and the count of gasket loops by size.
"""

# %%
import math

import numpy as np

from clesim import fragmentation as fr

# %%
# The ratio A_+/A_- forced by the identity is -cos(pi alpha').
for a in (0.55, 2 / 3, 0.75, 0.9):
    print(f"alpha'={a:.3f}  root={fr.identity_root(a):.9f}  -cos={-math.cos(math.pi * a):.9f}")

# %%
k = fr.FragKernel.from_ledger(6.0, p=0.5, rel_cutoff=1e-3)
M = fr.martingale_ensemble(1.0, k, [0.0, 0.1, 0.5, 1.0], 5000, seed=0)
se = M.std(axis=0, ddof=1) / math.sqrt(len(M))
for t, m, s in zip([0.0, 0.1, 0.5, 1.0], M.mean(axis=0), se):
    print(f"t={t:.1f}  mean M(t)={m:.4f} +- {s:.4f}")

# %%
# Loops with length in [eps, 2 eps]: the count scales like eps^-(alpha'+1/2).
trees = [fr.simulate_frag_tree(1.0, k, 2e-4, seed=s) for s in range(10)]
fit = fr.gasket_counting(trees, np.geomspace(1e-3, 10**-1.5, 7))
print("counts:", fit.counts.astype(int).tolist())
print(f"slope {fit.slope:.3f} +- {fit.stderr:.3f}  target {-(k.alpha_prime + 0.5):.4f}"
      f"  (quadrature root {-fr.malthusian_exponent(k):.4f})")
