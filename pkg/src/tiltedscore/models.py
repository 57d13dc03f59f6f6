"""Score-model interface and the mixture-backed reference implementation."""

import abc

from . import mixtures


class ScoreModel(abc.ABC):
    """Evaluator for a base density under the variance-preserving channel.

    Implementations must behave as pure functions of (u, sigma) and accept a
    single point (d,) or a batch (n, d), returning the matching shape.  Two
    identities are part of the contract for any base density: the denoiser at
    sigma = 0 is the identity, and the score at sigma = 1 is -u (the pure
    noise marginal is standard normal no matter what the base is).
    """

    @property
    @abc.abstractmethod
    def dim(self):
        """Dimension d of the base density."""

    @abc.abstractmethod
    def score(self, u, sigma):
        """Gradient of the log noised-marginal at (u, sigma), sigma in [0, 1]."""

    @abc.abstractmethod
    def denoiser(self, u, sigma):
        """Posterior mean E[X | U = u] at noise level sigma in [0, 1]."""

    def log_marginal(self, u, sigma):
        """Log-density of the noised marginal; optional capability."""
        raise NotImplementedError(
            f"{type(self).__name__} does not expose marginal log-densities"
        )


class MixtureScoreModel(ScoreModel):
    """Closed-form score model for a Gaussian mixture base density."""

    def __init__(self, mixture):
        self._mixture = mixture

    @property
    def mixture(self):
        return self._mixture

    @property
    def dim(self):
        return self._mixture.dim

    def score(self, u, sigma):
        return mixtures.mixture_score(self._mixture, u, sigma)

    def denoiser(self, u, sigma):
        return mixtures.mixture_denoiser(self._mixture, u, sigma)

    def log_marginal(self, u, sigma):
        noised = mixtures.noised_mixture(self._mixture, sigma)
        return mixtures.mixture_log_density(noised, u)

    def __repr__(self):
        return (
            f"MixtureScoreModel(n_components={self._mixture.n_components}, "
            f"dim={self._mixture.dim})"
        )
