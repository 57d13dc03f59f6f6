"""Score and denoiser identities for exponentially tilted densities.

Given any way to evaluate the score (or denoiser) of a base density under
the variance-preserving noising channel, this package evaluates the score
and denoiser of the exponentially tilted density

    p*(x)  proportional to  p(x) * exp(v.x - s*|x|^2/2),   s >= 0,

by querying the base quantities once at a shifted location and noise level.
It ships the closed-form Gaussian-mixture model family, an independent
quadrature/finite-difference oracle for verification, a reverse-diffusion
sampler that draws from tilted densities through denoiser queries alone,
and a CLI (``tiltedscore``) that runs verification sweeps and sampling
experiments from JSON configs.
"""

from .errors import (
    BoundaryMassWarning,
    ConfigError,
    DegenerateNoiseError,
    DivergentTiltError,
)
from .tweedie import (
    check_noise_level,
    denoiser_from_score,
    forward_noise,
    score_from_denoiser,
)
from .tilt import (
    ShiftedQuery,
    TiltParams,
    linear_tilt_score,
    rho_shift,
    rho_to_sigma,
    shift_map,
    sigma_to_rho,
    tilted_denoiser,
    tilted_score,
    tilted_score_unreduced,
)
from .mixtures import (
    GaussianMixture,
    mixture_box,
    mixture_denoiser,
    mixture_log_density,
    mixture_moments,
    mixture_score,
    noised_mixture,
    tilted_mixture,
)
from .models import MixtureScoreModel, ScoreModel
from .oracle import (
    MomentSummary,
    QuadratureSpec,
    fd_gradient,
    mc_moments,
    quad_denoiser,
    quad_marginal_logq,
    quad_normalizer,
)
from .sampler import (
    NoiseSchedule,
    SamplerConfig,
    denoiser_step,
    make_schedule,
    sample_base,
    sample_tilted,
)
from .config import ExperimentConfig, UGrid, load_experiment_config

__version__ = "0.1.0"

__all__ = [
    "BoundaryMassWarning",
    "ConfigError",
    "DegenerateNoiseError",
    "DivergentTiltError",
    "ExperimentConfig",
    "GaussianMixture",
    "MixtureScoreModel",
    "MomentSummary",
    "NoiseSchedule",
    "QuadratureSpec",
    "SamplerConfig",
    "ScoreModel",
    "ShiftedQuery",
    "TiltParams",
    "UGrid",
    "check_noise_level",
    "denoiser_from_score",
    "denoiser_step",
    "fd_gradient",
    "forward_noise",
    "linear_tilt_score",
    "load_experiment_config",
    "make_schedule",
    "mc_moments",
    "mixture_box",
    "mixture_denoiser",
    "mixture_log_density",
    "mixture_moments",
    "mixture_score",
    "noised_mixture",
    "quad_denoiser",
    "quad_marginal_logq",
    "quad_normalizer",
    "rho_shift",
    "rho_to_sigma",
    "sample_base",
    "sample_tilted",
    "score_from_denoiser",
    "shift_map",
    "sigma_to_rho",
    "tilted_denoiser",
    "tilted_mixture",
    "tilted_score",
    "tilted_score_unreduced",
    "__version__",
]
