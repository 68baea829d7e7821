"""Squared radial process (CIR) with Gamma-conjugate observation channels.

Filtering the radial process and squaring gives the same answer as
filtering the squared process with the matching channel.
"""
# %%
import numpy as np

from conjfilter import CHANNELS, CIRModel, RadialOUModel, pushforward_square, run_filter
from conjfilter.simulate import SimConfig, simulate

# %% every channel on its own simulated series
for channel in CHANNELS:
    model = CIRModel(-0.5, 1.0, 3, 1.0, 0.8, channel)
    ys = simulate(SimConfig(model, 50, seed=3)).observations
    trace = run_filter(model, model.stationary(), ys)
    print(f"{channel:14s} loglik {trace.total_loglik:9.3f} final length {trace.posteriors[-1].length}")

# %% squaring commutes with filtering
rou = RadialOUModel(-0.5, 1.0, 2.5, 1.0, 0.7)
cir = CIRModel(-0.5, 1.0, 2.5, 1.0, 0.7, "SquaredMult")
ys = simulate(SimConfig(rou, 20, seed=4)).observations
a = run_filter(rou, rou.stationary(), ys).posteriors[-1]
b = run_filter(cir, cir.stationary(), ys**2).posteriors[-1]
r = np.linspace(0.01, 10, 200)
print("max density gap", np.max(np.abs(pushforward_square(a).pdf(r) - b.pdf(r))))
