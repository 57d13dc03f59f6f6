"""Variance-preserving noising channel and the score/denoiser duality.

The channel observes u = sqrt(1 - sigma^2) * x + sigma * z with z standard
normal and sigma in [0, 1], so the marginal variance of a standardized input
is preserved: sigma = 0 is the identity and sigma = 1 is pure noise.  At any
sigma in (0, 1] the score of the noised marginal and the posterior mean of x
given u (the denoiser) determine each other through an affine map, which is
what lets every identity in this library be phrased in terms of either one.
"""

import numpy as np

from .errors import DegenerateNoiseError


def check_noise_level(sigma):
    """Validate a noise level and return it as a float.

    Parameters
    ----------
    sigma : float
        Must lie in the closed interval [0, 1].

    Returns
    -------
    float
    """
    sigma = float(sigma)
    if not (0.0 <= sigma <= 1.0):
        raise ValueError(f"noise level must lie in [0, 1], got {sigma}")
    return sigma


def forward_noise(x, sigma, noise):
    """Push a clean point through the channel.

    Computes sqrt(1 - sigma^2) * x + sigma * noise.  The standard-normal
    draw is supplied by the caller, so the map itself is deterministic.

    Parameters
    ----------
    x : ndarray
        Clean point(s), shape (d,) or (n, d).
    sigma : float
        Noise level in [0, 1].
    noise : ndarray
        Standard-normal draw(s) of the same shape as ``x``.
    """
    sigma = check_noise_level(sigma)
    x = np.asarray(x, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if x.shape != noise.shape:
        raise ValueError(
            f"x has shape {x.shape} but noise has shape {noise.shape}"
        )
    return np.sqrt(1.0 - sigma**2) * x + sigma * noise


def score_from_denoiser(denoised, u, sigma):
    """Marginal score at (u, sigma) from the posterior mean at (u, sigma).

    score = (sqrt(1 - sigma^2) * denoised - u) / sigma^2.

    Valid for sigma in (0, 1]; the map is singular at sigma = 0.
    """
    sigma = check_noise_level(sigma)
    if sigma == 0.0:
        raise DegenerateNoiseError("score/denoiser map is singular at sigma=0")
    denoised = np.asarray(denoised, dtype=float)
    u = np.asarray(u, dtype=float)
    return (np.sqrt(1.0 - sigma**2) * denoised - u) / sigma**2


def denoiser_from_score(score, u, sigma):
    """Posterior mean at (u, sigma) from the marginal score at (u, sigma).

    denoised = (u + sigma^2 * score) / sqrt(1 - sigma^2).

    Requires sigma strictly inside (0, 1): at sigma = 0 the forward map is
    singular and at sigma = 1 the inverse divides by zero.
    """
    sigma = check_noise_level(sigma)
    if sigma == 0.0 or sigma == 1.0:
        raise DegenerateNoiseError(
            f"denoiser recovery needs sigma strictly inside (0, 1), got {sigma}"
        )
    score = np.asarray(score, dtype=float)
    u = np.asarray(u, dtype=float)
    return (u + sigma**2 * score) / np.sqrt(1.0 - sigma**2)
