# Profile of the limit f_inf(c) of the signature recursion at theta = 0.85.
#
# The signature starts at 1/(1+theta) for c = 0. For small positive c the limit
# drops below that level, then climbs back through it exactly once; the
# crossing point is c_hat.  The ASCII plot below shows the dip.

# %%
import numpy as np

from frozen_rde import find_c_hat, profile_f_infinity
from frozen_rde.critical import c_upper_bound, count_upcrossings

theta = 0.85
level = 1 / (1 + theta)
cs, finf = profile_f_infinity(theta, np.linspace(0, c_upper_bound(theta), 81))
print(count_upcrossings(cs, finf, level))

# %% Zoom in on [0, 2 c_hat], where the dip lives.
c_hat = find_c_hat(theta).value
cs, finf = profile_f_infinity(theta, np.linspace(0, 2 * c_hat, 41))
h = finf - level
scale = 60 / max(abs(h).max(), 1e-300)
for c, v in zip(cs[::2], h[::2]):
    col = 30 + int(round(v * scale / 2))
    row = [" "] * 61
    row[30] = "|"
    row[min(max(col, 0), 60)] = "*"
    print(f"{c:.5f} {''.join(row)}")
