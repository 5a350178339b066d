"""
Parameter relations
===================

Couplings, the coloring-to-rho map and the half-plane red arm exponent.
"""

# %%
import numpy as np

from clesim import formulas

# %%
# The couplings at kappa' = 6 (percolation) and 16/3 (FK Ising).
for kp in (6.0, 16 / 3):
    cp = formulas.couplings(kp)
    print(f"kappa'={kp:.4f}  kappa={cp.kappa:.4f}  alpha={cp.alpha:.4f}  "
          f"alpha'={cp.alpha_prime:.4f}  q={formulas.q_of_kappa_prime(kp):.6f}")

# %%
# rho(p) is increasing, with rho(1/2) = (kappa - 6)/2.
cp = formulas.couplings(6.0)
ps = np.linspace(0.0, 1.0, 11)
print(np.round([formulas.rho_from_p(p, cp) for p in ps], 4))

# %%
# Arm exponent: composition 1 - d(kappa, rho(p)) against the explicit arctan form.
for p in (0.1, 0.25, 0.5, 0.75, 0.9):
    a = formulas.arm_exponent(p, cp)
    b = formulas.arm_exponent_closed_form(p, "percolation")
    print(f"p={p:.2f}  a={a:.6f}  closed form={b:.6f}  diff={abs(a - b):.1e}")
print("p -> 0 limit:", float(formulas.arm_exponent(0.0, cp)))
