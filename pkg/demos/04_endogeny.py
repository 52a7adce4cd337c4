# Start from two independent copies and apply the bivariate map repeatedly.
# Below theta* the off-diagonal mass drains away, slowly; above it, it settles
# at a positive value.  A Monte Carlo tree with shared labels gives the same
# number at finite depth.

# %%
from frozen_rde import iterate, product_measure, sample_bivariate_many
from frozen_rde._grid import default_K
from frozen_rde.rtp_sim import summarize_difference

for theta in (0.5, 0.9):
    tr = iterate(product_measure(theta, default_K(theta)), 4000, record_every=1000)
    print(theta, [f"{x:.4f}" for x in tr.off_diag], tr.verdict)

# %% Depth-12 comparison against the sampler.
theta, depth = 0.9, 12
tr = iterate(product_measure(theta, default_K(theta)), depth)
y, y2 = sample_bivariate_many(theta, depth, 40_000, seed=1)
s = summarize_difference(y, y2, depth)
print(f"deterministic {tr.off_diag[-1]:.4f}   Monte Carlo {s.p_diff:.4f} +- {2 * s.std_err:.4f}")
