# %% [markdown]
# Relaxation to equilibrium
#
# Start from a bump at -3 and follow the truncated problem with the implicit
# finite-volume solver. Mass is conserved, the relative entropy decreases and
# the distance to equilibrium decays exponentially.

# %%
import numpy as np

from fpif import DensityField, Grid, build_operator, compute_steady_state, evolve, make_canonical_drift
from fpif.diagnostics import e_norm_series, entropy_series, fit_exponential_rate

spec = make_canonical_drift("Quadratic")
grid = Grid.from_bounds(-8.0, 18.0, 0.02)
op = build_operator(spec, grid, R=10.0, alpha_R=1000.0)
u0 = DensityField.gaussian(grid, -3.0, 0.3)
trace = evolve(u0, spec, grid, dt=2e-3, t_end=8.0, snapshot_every=0.1, op=op)
print(f"max |mass - 1| = {np.max(np.abs(trace.mass - 1)):.1e}")

# %%
prof = compute_steady_state(spec, grid)
ent = entropy_series(trace, prof, "Square")
for t in (0.0, 1.0, 2.0, 4.0, 8.0):
    i = np.argmin(np.abs(ent.times - t))
    print(f"t = {t:3.1f}: N_R = {trace.firing_rate[int(round(t / trace.dt))]:.4f}, entropy = {ent.values[i]:.4e}")

# %% [markdown]
# Fit log ||u(t) - ubar_R||_E on the last three quarters of the run.

# %%
ts, dist = e_norm_series(trace, op.equilibrium)
fit = fit_exponential_rate(ts, dist)
print(f"decay rate {fit.lambda_hat:.4f} (r^2 = {fit.r_squared:.5f})")
