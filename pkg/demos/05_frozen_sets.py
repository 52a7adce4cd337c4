"""Frozen-set iteration on a finite tree.

Each round freezes the vertices whose burning time is forced by the previous
round.  Even rounds grow, odd rounds shrink, and the true solution is squeezed
between them.  The set F_2 always contains the vertices forced by the
boundary, so the interesting statistic is whether it reaches the top levels.
"""

# %%
import numpy as np

from frozen_rde import frozen_iteration

r = frozen_iteration(0.6, 12, seed=0, rounds=6)
print("set sizes by round:", r.frozen_set_sizes)
print("inclusions:", r.inclusions_ok, "sandwich:", r.sandwich_ok)

# %% How often does F_2 touch the top three levels, as the tree deepens?
for depth in (8, 10, 12, 14):
    hits = [frozen_iteration(0.6, depth, s, 2).nonempty_within(2, 3) for s in range(100)]
    print(f"depth {depth:2d}: {np.mean(hits):.2f}")
