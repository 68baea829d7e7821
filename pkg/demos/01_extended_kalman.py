"""Extended Kalman class: a Gaussian prior times |x + mu|^(2i).

The class is closed under the Kalman update and prediction, so a mixture
prior stays a mixture of fixed length and the scalar Kalman recursion runs
unchanged on the (m, sigma2) part.
"""
# %%
import numpy as np

from conjfilter import KALMAN, KalmanModel, KalmanTheta, MixtureDistribution, run_filter
from conjfilter.simulate import SimConfig, simulate

model = KalmanModel(h=1.0, gamma2=0.5, a=0.8, beta2=0.6)
init = MixtureDistribution.from_weights(KALMAN, KalmanTheta(0.5, 0.2, 1.0), [0.3, 0.5, 0.2])
path = simulate(SimConfig(model, 30, seed=1, init=init))

# %% run the exact filter
trace = run_filter(model, init, path.observations)
print("log-likelihood", trace.total_loglik)
print("mixture lengths", {d.length for d in trace.posteriors})

# %% the posterior mean tracks the hidden state
means = np.array([d.moment(1) for d in trace.posteriors])
print("rms error of posterior mean", np.sqrt(np.mean((means - path.states) ** 2)))

# %% the weights settle after a few steps
for k in (0, 9, 29):
    print(k, np.round(trace.posteriors[k].weights, 4))
