"""Check the exact filter against a quadrature grid and a particle filter."""
# %%
import numpy as np

from conjfilter import RadialOUModel, run_filter
from conjfilter.oracle import GridSpec, compare, grid_filter, particle_filter
from conjfilter.simulate import SimConfig, sample_mixture, sample_step, simulate

model = RadialOUModel(-0.5, 1.0, 1, 1.0, 0.5)
init = model.stationary()
ys = simulate(SimConfig(model, 20, seed=11)).observations
trace = run_filter(model, init, ys)

# %% grid oracle; graded nodes resolve posteriors that spike at zero
grid = grid_filter(init.logpdf, model.transition_logpdf, model.obs_logpdf, GridSpec(0, 9, 960, grading=2.0), ys)
rep = compare(trace.posteriors, trace.log_marginals, grid)
print("grid: sup density diff", rep["sup_density_diff"], "loglik diff", rep["loglik_diff"])

# %% particle oracle with replicate standard errors
pf = particle_filter(
    lambda n, rng: sample_mixture(init, n, rng),
    lambda x, rng: sample_step(model, x, rng),
    model.obs_logpdf, 20_000, ys, seed=12, replicates=10,
)
rep = compare(trace.posteriors, trace.log_marginals, pf)
z = np.abs(np.r_[rep["z_mean"], rep["z_var"], rep["z_loglik"]])
print("particle: max |z|", z.max(), "share below 2", np.mean(z < 2))
