# %% [markdown]
# Stationary state of the superlinear integrate-and-fire model
#
# With h(x) = x^2 on the right, a noiseless trajectory reaches +inf in finite
# time. The stationary density balances that escape against reinjection at 0.

# %%
import numpy as np

from fpif import (
    Grid,
    compute_steady_state,
    compute_truncated_steady_state,
    default_truncated_grid,
    make_canonical_drift,
    zeta,
)

spec = make_canonical_drift("Quadratic")
grid = Grid.from_bounds(-8.0, 18.0, 0.01)
prof = compute_steady_state(spec, grid)
print(f"firing rate N_inf = {prof.n_inf:.10f}")
print(f"mass on the grid {prof.grid_mass:.6f}, beyond x_max {prof.right_tail_mass:.6f}")

# %% [markdown]
# Far to the right the flux h u_inf is nearly the firing rate; the gap is
# bounded by zeta(x) = sup h'/h^2.

# %%
for p in (4.0, 6.0, 8.0):
    gap = abs(float(spec.h(p)) * float(prof(np.array([p]))[0]) - prof.n_inf) / prof.n_inf
    print(f"x = {p:g}: |h u - N| / N = {gap:.3e}  <=  zeta = {zeta(spec, p):.3e}")

# %% [markdown]
# Truncating at R with absorption rate R^3 recovers the rate as R grows,
# with an O(1/R) gap.

# %%
for R in (10.0, 20.0, 40.0):
    tr = compute_truncated_steady_state(spec, R, R**3, default_truncated_grid(spec, R, R**3))
    print(f"R = {R:4.0f}: Nbar_R = {tr.nbar_R:.6f}, gap {abs(tr.nbar_R - prof.n_inf):.2e}")
