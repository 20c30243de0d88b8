"""
Transition profile and constants
================================

Walks through the one-dimensional building blocks: the profile q, its
smoothed partner v0 = tanh(z/4), the two double-well potentials and the
constants c0 and sigma that convert diffuse energies to sharp ones.
"""

#%%
import numpy as np

from diffwillmore.profile import (compute_constants, eval_f, eval_profile, eval_v0,
                                  invert_profile, potential_W, potential_Wo)

#%%
# The profile and its smoothed version
# ------------------------------------
z = np.linspace(-12, 12, 7)
q, dq, _ = eval_profile(z)
v0, dv0, _ = eval_v0(z)
for row in zip(z, q, v0):
    print("z = %6.2f   q = %+.6f   v0 = %+.6f" % row)

#%%
# f undoes q: f(q(z)) = tanh(z/4)
z = np.linspace(-40, 40, 2001)
f, _ = eval_f(eval_profile(z)[0])
print("max |f(q(z)) - tanh(z/4)| =", np.abs(f - np.tanh(z / 4)).max())
print("q^-1(0.5) =", invert_profile(0.5))

#%%
# Potentials near the wells
# -------------------------
r = np.array([-1.2, -1.0, -0.5, 0.0, 0.5, 1.0, 1.2])
w, dw, d2w = potential_W(r)
wo, _, d2wo = potential_Wo(r)
print("   r        W        W''      W_o      W_o''")
for row in zip(r, w, d2w, wo, d2wo):
    print("%5.2f  %8.5f %8.5f %8.5f %8.5f" % row)

#%%
# Constants
# ---------
c0, sigma = compute_constants()
print("c0    =", c0, "(1/3 =", 1 / 3, ")")
print("sigma =", sigma, "(560/621 =", 560 / 621, ")")
