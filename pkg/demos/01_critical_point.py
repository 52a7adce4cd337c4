"""Where does a non-diagonal bivariate solution first appear?

Below the critical parameter the only admissible constant is zero; above it
there is a smallest positive constant c_hat(theta).  This walk-through locates
both numerically and prints a small table.
"""

# %%
from frozen_rde import find_c_hat, sweep_c_hat, theta_star
from frozen_rde.critical import c_upper_bound

ts = theta_star()
print(f"critical parameter  theta* = {ts.value:.12f}  (bracket width {ts.bracket[1] - ts.bracket[0]:.1e})")

# %% A few individual roots, next to the a-priori upper bound.
for th in (0.65, 0.7, 0.8, 0.9, 0.99):
    r = find_c_hat(th)
    print(f"theta={th:<5} c_hat={r.value:.10f}  upper bound={c_upper_bound(th):.6f}")

# %% A coarse sweep: zero below theta*, positive above.
for th, c, status in sweep_c_hat(0.6, 0.7, 0.01, workers=1):
    print(f"{th:.2f}  {c if c is not None else float('nan'):.8f}  {status}")
