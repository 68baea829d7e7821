"""Radial Ornstein-Uhlenbeck signal seen through multiplicative noise.

Each update adds one component, so the filter stays finite and the
likelihood is exact.  We profile it over the drift parameter.
"""
# %%
import numpy as np

from conjfilter import RadialOUModel, log_likelihood, run_filter
from conjfilter.simulate import SimConfig, simulate

truth = RadialOUModel(theta_drift=-0.5, sigma_diff=1.0, delta=2, Delta=1.0, lambda_noise=0.5)
ys = simulate(SimConfig(truth, 200, seed=7)).observations

# %% exact log-likelihood along a grid of drift values
thetas = np.linspace(-1.5, -0.1, 15)
ll = [log_likelihood(RadialOUModel(t, 1.0, 2, 1.0, 0.5), RadialOUModel(t, 1.0, 2, 1.0, 0.5).stationary(), ys) for t in thetas]
for t, v in zip(thetas, ll):
    print(f"{t:6.2f} {v:10.3f}")
print("argmax", thetas[int(np.argmax(ll))])

# %% mixture length grows by one per observation; pruning caps it cheaply
exact = run_filter(truth, truth.stationary(), ys)
pruned = run_filter(truth, truth.stationary(), ys, prune=1e-12)
print("lengths", exact.posteriors[-1].length, pruned.posteriors[-1].length)
print("loglik change from pruning", pruned.total_loglik - exact.total_loglik)
