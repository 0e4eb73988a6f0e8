# %% [markdown]
# Particles against the PDE
#
# Simulate the stochastic neurons directly: Euler-Maruyama up to x_blow, a
# deterministic flight to +inf, then a spike and reset to 0. The long-run
# histogram and spike rate match the stationary state.

# %%
import numpy as np

from fpif import Grid, compute_steady_state, make_canonical_drift
from fpif.particles import SdeConfig, simulate

spec = make_canonical_drift("Quadratic")
grid = Grid.from_bounds(-8.0, 18.0, 0.05)
prof = compute_steady_state(spec, grid)
res = simulate(prof.average_field(), spec, SdeConfig(m_particles=20_000, t_end=8.0, seed=1))

# %%
rate = res.mean_rate()
print(f"spike rate {rate:.4f} vs N_inf {prof.n_inf:.4f}")
l1 = np.sum(np.abs(res.time_average.cells - prof.values)) * grid.dx
print(f"L1 distance on the grid {l1:.4f}; in flight {res.in_flight_fraction:.2e}")
centres, rates = res.rate_series()
print("rate per unit time:", np.round(rates, 3))
