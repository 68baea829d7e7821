"""Exact finite mixture filters for sampled diffusions observed with noise."""
from .model_derived import CHANNELS, CIRModel, channel_obs_logdensity, pullback_sqrt, pushforward_square
from .engine import FilterTrace, log_likelihood, predict, run_filter, update
from .errors import (
    ConfigError,
    DegeneracyError,
    DegenerateDistributionError,
    FilterError,
    GridLeakageError,
    ImpossibleObservationError,
    SingularParameterError,
)
from .model_kalman import KalmanModel, laplace_transform
from .mixtures import (
    GAMMA_CIR,
    KALMAN,
    RADIAL_OU,
    Dirac,
    KalmanTheta,
    MixtureDistribution,
    ScaleTheta,
    c2i_shifted,
    component_logpdf,
    log_abs_moment,
    mixture_moment,
    moment_binom_identity,
    normalize,
)
from .model_radial_ou import RadialOUModel, derive_discrete, moment_sum_identity, noise_obs_logpdf

__version__ = "0.1.0"
