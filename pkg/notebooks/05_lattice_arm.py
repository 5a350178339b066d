"""
Divide-and-color arm exponents
==============================

Critical bond percolation on the square lattice, clusters colored red with
probability p.  Fit the decay of P(origin connected to distance R by red
sites) in a half-plane box, after calibrating on the ordinary one-arm event.
"""

# %%
from clesim import formulas
from clesim import lattice as lat

radii = [8, 16, 32, 64, 128]
cfg = lat.LatticeConfig(lat.SQUARE_BOND, trials=20_000, seed=0)

# %%
cal = lat.calibrate_one_arm(cfg, radii)
print(f"one-arm exponent {cal.fitted_exponent:.3f} +- {cal.fit_stderr:.3f} (target 1/3)")

# %%
cp = formulas.couplings(6.0)
for p in (0.5, 0.75):
    est = lat.estimate_arm(lat.LatticeConfig(lat.SQUARE_BOND, p_color=p, trials=20_000), radii)
    print(f"p={p:.2f}  red arm exponent {est.fitted_exponent:.3f} +- {est.fit_stderr:.3f}"
          f"  prediction {formulas.arm_exponent(p, cp):.4f}")
