"""
Stable looptrees
================

Build looptrees from excursions of a heavy-tailed walk, check the loop
perimeter tail and the invariance of the law under rerooting.
"""

# %%
import numpy as np
from scipy import stats

from clesim import looptree as lt

alpha = 1.5

# %%
# A small example: the walk, its loops and their attachment points.
t = lt.build_looptree(lt.sample_excursion(alpha, 16, seed=3))
print("steps:", t.excursion.steps.tolist())
print("perimeters:", t.perimeter.tolist())

# %%
# Perimeter tail: P(perimeter >= x) decays like x^(-alpha).
_, per = lt.ensemble_statistics(alpha, 2**16, 8, seed=0, keep_perimeters=True)
slope, se = lt.perimeter_tail_fit(per, 10, 1000)
print(f"tail slope {slope:.3f} +- {se:.3f} (target {-alpha})")

# %%
# Largest perimeter under the original root and under a uniform reroot.
a, _ = lt.ensemble_statistics(alpha, 1024, 2000, seed=0)
b, _ = lt.ensemble_statistics(alpha, 1024, 2000, seed=2000, rerooted=True)
print(f"mean max perimeter {a.mean():.1f} vs {b.mean():.1f};"
      f" KS p-value {stats.ks_2samp(a, b).pvalue:.3f}")
