"""Gaussian mixtures with closed-form noising, scores, denoisers, and tilts.

Mixtures are the conjugate family for everything this library does: the
noised marginal is again a mixture, the posterior mean has a closed form,
and an exponential tilt maps mixtures to mixtures with computable weights.
That makes them the reference models against which the independent
quadrature oracle is checked, and vice versa.

All log-weight manipulation happens in the log domain (logsumexp) so that
strongly tilted or far-tail queries do not underflow.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .errors import ConfigError
from .tweedie import check_noise_level

_LOG_2PI = np.log(2.0 * np.pi)

# Construction-time tolerances: weights must sum to 1 and covariances must be
# symmetric to within this before a mixture is accepted.
_SUM_TOL = 1e-12
_SYM_TOL = 1e-12


@dataclass(frozen=True)
class GaussianMixture:
    """Immutable mixture of full-covariance Gaussians.

    Parameters
    ----------
    weights : ndarray, shape (K,)
        Strictly positive, summing to 1 within 1e-12.
    means : ndarray, shape (K, d)
    covariances : ndarray, shape (K, d, d)
        Each symmetric (within 1e-12) and positive definite.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True)
        mu = np.array(self.means, dtype=float, copy=True)
        cov = np.array(self.covariances, dtype=float, copy=True)
        if w.ndim != 1 or w.shape[0] == 0:
            raise ValueError(f"weights must be a non-empty vector, got shape {w.shape}")
        k = w.shape[0]
        if mu.ndim != 2 or mu.shape[0] != k:
            raise ValueError(f"means must have shape ({k}, d), got {mu.shape}")
        d = mu.shape[1]
        if cov.shape != (k, d, d):
            raise ValueError(f"covariances must have shape ({k}, {d}, {d}), got {cov.shape}")
        for arr, name in ((w, "weights"), (mu, "means"), (cov, "covariances")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        if np.any(w <= 0.0):
            raise ValueError("weights must be strictly positive")
        if abs(w.sum() - 1.0) > _SUM_TOL:
            raise ValueError(f"weights must sum to 1 within {_SUM_TOL}, got sum {w.sum()!r}")
        asym = np.max(np.abs(cov - np.transpose(cov, (0, 2, 1))))
        if asym > _SYM_TOL:
            raise ValueError(f"covariances must be symmetric within {_SYM_TOL}, max asymmetry {asym:.3e}")
        for idx in range(k):
            smallest = np.linalg.eigvalsh(cov[idx])[0]
            if smallest <= 0.0:
                raise ValueError(
                    f"covariance {idx} is not positive definite (smallest eigenvalue {smallest:.3e})"
                )
        for arr in (w, mu, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def n_components(self):
        return self.weights.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]

    @classmethod
    def single(cls, mean, cov):
        """One-component convenience constructor."""
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        return cls(weights=np.ones(1), means=mean[None, :], covariances=cov[None, :, :])

    @classmethod
    def standard(cls, dim):
        """Standard normal N(0, I) in the given dimension."""
        return cls.single(np.zeros(dim), np.eye(dim))

    def to_dict(self):
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }

    @classmethod
    def from_dict(cls, data, path="mixture"):
        """Build from the JSON object form, with field-path diagnostics."""
        if not isinstance(data, dict):
            raise ConfigError(path, f"expected an object, got {type(data).__name__}")
        required = {"weights", "means", "covariances"}
        unknown = sorted(set(data) - required)
        if unknown:
            raise ConfigError(path, f"unknown keys: {unknown}")
        missing = sorted(required - set(data))
        if missing:
            raise ConfigError(path, f"missing keys: {missing}")
        for key in ("weights", "means", "covariances"):
            if not isinstance(data[key], list) or not data[key]:
                raise ConfigError(f"{path}.{key}", "expected a non-empty list")
        try:
            w = np.asarray(data["weights"], dtype=float)
            mu = np.asarray(data["means"], dtype=float)
            cov = np.asarray(data["covariances"], dtype=float)
        except (ValueError, TypeError) as exc:
            raise ConfigError(path, f"ragged or non-numeric entries: {exc}") from exc
        try:
            return cls(weights=w, means=mu, covariances=cov)
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from exc


def _as_points(u, dim):
    """Coerce u to a (n, d) batch; report whether it was a single point."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = u.reshape(1)
    if u.ndim == 1:
        if u.shape[0] != dim:
            raise ValueError(f"point has dimension {u.shape[0]}, model has dimension {dim}")
        return u[None, :], True
    if u.ndim == 2:
        if u.shape[1] != dim:
            raise ValueError(f"points have dimension {u.shape[1]}, model has dimension {dim}")
        return u, False
    raise ValueError(f"expected shape (d,) or (n, d), got {u.shape}")


def _component_gaussians(means, covs, u):
    """Per-component log N(u; mean_k, cov_k) and cov_k^{-1} (u - mean_k).

    u is a (n, d) batch; returns logpdf of shape (n, K) and the solved
    residuals of shape (n, K, d).
    """
    n, d = u.shape
    k = means.shape[0]
    logpdf = np.empty((n, k))
    solved = np.empty((n, k, d))
    for idx in range(k):
        chol = np.linalg.cholesky(covs[idx])
        half = solve_triangular(chol, (u - means[idx]).T, lower=True)  # (d, n)
        logdet = 2.0 * np.sum(np.log(np.diagonal(chol)))
        logpdf[:, idx] = -0.5 * (d * _LOG_2PI + logdet + np.sum(half * half, axis=0))
        solved[:, idx, :] = solve_triangular(chol.T, half, lower=False).T
    return logpdf, solved


def _responsibilities(weights, logpdf):
    log_r = np.log(weights)[None, :] + logpdf
    log_r -= logsumexp(log_r, axis=1, keepdims=True)
    return np.exp(log_r)


def mixture_log_density(mixture, x):
    """Log-density of the mixture at x, shape (d,) -> float or (n, d) -> (n,)."""
    pts, single = _as_points(x, mixture.dim)
    logpdf, _ = _component_gaussians(mixture.means, mixture.covariances, pts)
    out = logsumexp(np.log(mixture.weights)[None, :] + logpdf, axis=1)
    return float(out[0]) if single else out


def noised_mixture(mixture, sigma):
    """Mixture law of sqrt(1 - sigma^2) X + sigma Z for X drawn from the mixture.

    Weights are unchanged; means scale by sqrt(1 - sigma^2) and each
    covariance becomes (1 - sigma^2) * Sigma_k + sigma^2 * I.  sigma = 0
    returns the parameters unchanged.
    """
    sigma = check_noise_level(sigma)
    keep = 1.0 - sigma**2
    eye = np.eye(mixture.dim)
    return GaussianMixture(
        weights=mixture.weights,
        means=np.sqrt(keep) * mixture.means,
        covariances=keep * mixture.covariances + sigma**2 * eye,
    )


def mixture_score(mixture, u, sigma):
    """Score of the noised mixture marginal at (u, sigma).

    The gradient of the log of a mixture is the responsibility-weighted sum
    of component gradients: -sum_k r_k(u) C_k^{-1} (u - m_k) with noised
    parameters (m_k, C_k).
    """
    sigma = check_noise_level(sigma)
    pts, single = _as_points(u, mixture.dim)
    noised = noised_mixture(mixture, sigma)
    logpdf, solved = _component_gaussians(noised.means, noised.covariances, pts)
    resp = _responsibilities(noised.weights, logpdf)
    out = -np.einsum("nk,nkd->nd", resp, solved)
    return out[0] if single else out


def mixture_denoiser(mixture, u, sigma):
    """Posterior mean E[X | U = u] under the channel at noise level sigma.

    Closed form: responsibilities come from the noised mixture, and each
    component's posterior mean solves

        (I + g * Sigma_k) x = mu_k + (c / sigma^2) * Sigma_k u,

    with c = sqrt(1 - sigma^2), g = (1 - sigma^2) / sigma^2.  sigma = 0
    returns u itself (the channel is the identity) and sigma = 1 returns the
    mixture mean (u carries no information).
    """
    sigma = check_noise_level(sigma)
    pts, single = _as_points(u, mixture.dim)
    if sigma == 0.0:
        out = pts.copy()
        return out[0] if single else out
    keep = 1.0 - sigma**2
    c = np.sqrt(keep)
    noised = noised_mixture(mixture, sigma)
    logpdf, _ = _component_gaussians(noised.means, noised.covariances, pts)
    resp = _responsibilities(noised.weights, logpdf)
    n, d = pts.shape
    posterior = np.empty((n, mixture.n_components, d))
    eye = np.eye(d)
    for k in range(mixture.n_components):
        cov = mixture.covariances[k]
        rhs = mixture.means[k][:, None] + (c / sigma**2) * (cov @ pts.T)
        posterior[:, k, :] = np.linalg.solve(eye + (keep / sigma**2) * cov, rhs).T
    out = np.einsum("nk,nkd->nd", resp, posterior)
    return out[0] if single else out


def tilted_mixture(mixture, tilt):
    """Exact mixture form of p(x) * exp(v.x - s*|x|^2/2), renormalized.

    Component k maps to

        Sigma~_k = (I + s Sigma_k)^{-1} Sigma_k
        mu~_k    = (I + s Sigma_k)^{-1} (mu_k + Sigma_k v)
        log Z_k  = -0.5 logdet(I + s Sigma_k) + 0.5 b.mu~_k - 0.5 mu_k.Sigma_k^{-1}mu_k,
        b        = Sigma_k^{-1} mu_k + v

    and the new weights are proportional to w_k Z_k (renormalized in the log
    domain).  An identity tilt returns the parameters bitwise unchanged.
    """
    if tilt.dim != mixture.dim:
        raise ValueError(f"tilt has dimension {tilt.dim}, mixture has dimension {mixture.dim}")
    v, s = tilt.v, tilt.s
    if s == 0.0 and not v.any():
        return GaussianMixture(
            weights=mixture.weights / mixture.weights.sum(),
            means=mixture.means,
            covariances=mixture.covariances,
        )
    k_comp, d = mixture.n_components, mixture.dim
    new_means = np.empty_like(mixture.means)
    new_covs = np.empty_like(mixture.covariances)
    log_z = np.empty(k_comp)
    eye = np.eye(d)
    for k in range(k_comp):
        cov, mu = mixture.covariances[k], mixture.means[k]
        prec_mu = np.linalg.solve(cov, mu)
        if s == 0.0:
            # pure location tilt: covariance unchanged, mean shifts by Sigma v
            new_covs[k] = cov
            new_means[k] = mu + cov @ v
            log_z[k] = v @ mu + 0.5 * v @ cov @ v
        else:
            t_mat = eye + s * cov
            mean_k = np.linalg.solve(t_mat, mu + cov @ v)
            cov_k = np.linalg.solve(t_mat, cov)
            new_covs[k] = 0.5 * (cov_k + cov_k.T)  # solve() loses exact symmetry
            new_means[k] = mean_k
            _, logdet_t = np.linalg.slogdet(t_mat)
            b = prec_mu + v
            log_z[k] = -0.5 * logdet_t + 0.5 * b @ mean_k - 0.5 * mu @ prec_mu
    log_w = np.log(mixture.weights) + log_z
    log_w -= logsumexp(log_w)
    return GaussianMixture(weights=np.exp(log_w), means=new_means, covariances=new_covs)


def mixture_moments(mixture):
    """Mean vector and covariance matrix of the mixture law.

    cov = sum_k w_k (Sigma_k + mu_k mu_k^T) - mean mean^T.
    """
    mean = mixture.weights @ mixture.means
    second = np.einsum(
        "k,kij->ij",
        mixture.weights,
        mixture.covariances + np.einsum("ki,kj->kij", mixture.means, mixture.means),
    )
    return mean, second - np.outer(mean, mean)


def mixture_box(mixture, pad_std=10.0):
    """Axis-aligned box covering the mixture out to pad_std marginal stds.

    Returns (lower, upper) arrays of shape (d,), suitable for building a
    quadrature spec whose boundary mass is negligible.
    """
    if pad_std <= 0.0:
        raise ValueError(f"pad_std must be > 0, got {pad_std}")
    stds = np.sqrt(np.diagonal(mixture.covariances, axis1=1, axis2=2))
    lower = np.min(mixture.means - pad_std * stds, axis=0)
    upper = np.max(mixture.means + pad_std * stds, axis=0)
    return lower, upper
