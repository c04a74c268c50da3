"""Moment-based estimation of residual variance and signal-to-noise ratio in
high-dimensional linear regression with Gaussian predictors."""

from .errors import HDSNRError
from .estimators import (EstimatorKind, PointEstimates, estimate_identity, estimate_ols, estimate_spectral,
                         estimate_whitened)
from .model import (AR1, AR1Estimated, BumpDense, BumpSparse, Explicit, Gaussian, GaussianIsotropic,
                    HalfUniformHalfNormal, Identity, Known, ModelParams, Rademacher, RegressionSample,
                    SampleScaled, generate_beta, generate_design, simulate_sample, substream)
from .simharness import SimulationConfig, run_experiment
from .suffstats import SufficientStats, compute_stats, whitened_stats
from .uncertainty import (ConfidenceInterval, Target, confidence_interval, exact_covariance_identity,
                          psi_identity, psi_spectral)
from .wishart import MomentId, MomentSet, closed_form_moment, population_moments

__version__ = "0.1.0"
