"""Brute-force ground truth: grid quadrature, finite differences, moments.

Everything here is deliberately independent of the closed-form mixture
paths: the oracle sees a base density only through a log-density callable
and integrates on a tensor-product trapezoid grid in the log domain.  For
integrands with Gaussian tails the trapezoid rule converges faster than
any power of the step, so modest per-axis node counts reach tight
tolerances; the self-consistency check is doubling ``points_per_axis`` and
confirming the answers move by less than the claimed tolerance.

Dimension is limited to d <= 3 (the grid is exponential in d); the total
node count is capped at 2^24.
"""

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .errors import BoundaryMassWarning

# A boundary-to-total mass ratio above this triggers BoundaryMassWarning.
BOUNDARY_MASS_RATIO = 1e-10

MAX_GRID_NODES = 2**24


@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor-product integration box: per-axis bounds and node count.

    Parameters
    ----------
    lower, upper : ndarray, shape (d,)
        Box bounds, lower < upper per axis, 1 <= d <= 3.
    points_per_axis : int
        Trapezoid nodes per axis, at least 32; points_per_axis^d may not
        exceed 2^24.
    """

    lower: np.ndarray
    upper: np.ndarray
    points_per_axis: int

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError(
                f"lower and upper must be matching vectors, got {lower.shape} and {upper.shape}"
            )
        d = lower.shape[0]
        if not 1 <= d <= 3:
            raise ValueError(f"grid quadrature supports 1 <= d <= 3, got d={d}")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("box bounds must be finite")
        if np.any(lower >= upper):
            raise ValueError("lower must be strictly below upper on every axis")
        n = int(self.points_per_axis)
        if n < 32:
            raise ValueError(f"points_per_axis must be at least 32, got {n}")
        if n**d > MAX_GRID_NODES:
            raise ValueError(
                f"grid of {n}^{d} nodes exceeds the cap of {MAX_GRID_NODES}"
            )
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "points_per_axis", n)

    @property
    def dim(self):
        return self.lower.shape[0]

    def with_points(self, points_per_axis):
        """Same box, different resolution (for convergence self-checks)."""
        return QuadratureSpec(self.lower, self.upper, points_per_axis)

    def to_dict(self):
        return {
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "points_per_axis": self.points_per_axis,
        }


def _grid(spec):
    """Nodes (N, d), per-node log trapezoid weights (N,), boundary mask (N,)."""
    axes, log_w_axes, edge_axes = [], [], []
    for i in range(spec.dim):
        n = spec.points_per_axis
        axes.append(np.linspace(spec.lower[i], spec.upper[i], n))
        step = (spec.upper[i] - spec.lower[i]) / (n - 1)
        log_w = np.full(n, np.log(step))
        log_w[0] -= np.log(2.0)
        log_w[-1] -= np.log(2.0)
        log_w_axes.append(log_w)
        edge = np.zeros(n, dtype=bool)
        edge[0] = edge[-1] = True
        edge_axes.append(edge)
    node_mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in node_mesh], axis=-1)
    log_w = sum(g.reshape(-1) for g in np.meshgrid(*log_w_axes, indexing="ij"))
    boundary = np.zeros(nodes.shape[0], dtype=bool)
    for g in np.meshgrid(*edge_axes, indexing="ij"):
        boundary |= g.reshape(-1)
    return nodes, log_w, boundary


def _eval_log_density(log_density, nodes):
    vals = np.asarray(log_density(nodes), dtype=float)
    if vals.shape != (nodes.shape[0],):
        raise ValueError(
            f"log-density callable must map (n, d) to (n,), got shape {vals.shape}"
        )
    # -inf is exact zero mass and is fine; NaN or +inf is a broken integrand
    if np.any(np.isnan(vals)) or np.any(np.isposinf(vals)):
        raise ValueError("log-density produced NaN or +inf on the quadrature grid")
    return vals


def _check_boundary_mass(log_integrand, boundary, what):
    total = logsumexp(log_integrand)
    if np.isneginf(total):
        raise ValueError(f"{what} integrand underflows to zero on the whole grid")
    edge = logsumexp(log_integrand[boundary])
    if edge - total > np.log(BOUNDARY_MASS_RATIO):
        warnings.warn(
            f"boundary nodes carry {np.exp(edge - total):.2e} of the {what} "
            f"integrand mass; enlarge the integration box",
            BoundaryMassWarning,
            stacklevel=3,
        )
    return total


def quad_normalizer(log_density, tilt, spec):
    """Ratio integral p(x) exp(v.x - s|x|^2/2) dx / p(x) dx on the box.

    The base integral in the denominator makes the result invariant to any
    constant offset in ``log_density``; in particular the identity tilt
    returns 1 up to quadrature error.
    """
    nodes, log_w, boundary = _grid(spec)
    log_p = _eval_log_density(log_density, nodes)
    exponent = nodes @ tilt.v - 0.5 * tilt.s * np.sum(nodes**2, axis=1)
    log_num = log_w + log_p + exponent
    log_den = log_w + log_p
    total_num = _check_boundary_mass(log_num, boundary, "tilted")
    total_den = _check_boundary_mass(log_den, boundary, "base")
    return float(np.exp(total_num - total_den))


def quad_denoiser(log_density, u, sigma, spec):
    """Posterior mean E[X | U = u] by direct integration.

    The posterior density is proportional to

        p(x) * exp(sqrt(1-sigma^2) u.x / sigma^2 - (1/sigma^2 - 1)|x|^2/2),

    integrated against x and against 1 on the same grid.  Requires sigma
    strictly inside (0, 1).
    """
    sigma = float(sigma)
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"quad_denoiser needs sigma in (0, 1), got {sigma}")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (spec.dim,):
        raise ValueError(f"u must have shape ({spec.dim},), got {u.shape}")
    nodes, log_w, boundary = _grid(spec)
    log_p = _eval_log_density(log_density, nodes)
    keep = 1.0 - sigma**2
    exponent = nodes @ (np.sqrt(keep) * u / sigma**2) - 0.5 * (keep / sigma**2) * np.sum(
        nodes**2, axis=1
    )
    log_integrand = log_w + log_p + exponent
    _check_boundary_mass(log_integrand, boundary, "posterior")
    shifted = np.exp(log_integrand - np.max(log_integrand))
    return (shifted @ nodes) / shifted.sum()


def quad_marginal_logq(log_density, u, sigma, spec):
    """Log-density of the noised marginal at (u, sigma) by direct integration.

    log q(u, sigma) = log of the integral of p(x) N(u; sqrt(1-sigma^2) x,
    sigma^2 I) dx.  Requires sigma in (0, 1].
    """
    sigma = float(sigma)
    if not 0.0 < sigma <= 1.0:
        raise ValueError(f"quad_marginal_logq needs sigma in (0, 1], got {sigma}")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (spec.dim,):
        raise ValueError(f"u must have shape ({spec.dim},), got {u.shape}")
    nodes, log_w, boundary = _grid(spec)
    log_p = _eval_log_density(log_density, nodes)
    d = spec.dim
    resid = u[None, :] - np.sqrt(1.0 - sigma**2) * nodes
    log_kernel = -0.5 * d * np.log(2.0 * np.pi * sigma**2) - np.sum(resid**2, axis=1) / (
        2.0 * sigma**2
    )
    total = _check_boundary_mass(log_w + log_p + log_kernel, boundary, "marginal")
    return float(total)


def fd_gradient(f, u, h=1e-4):
    """Central finite-difference gradient of a scalar function.

    Per-coordinate step h * max(1, |u_i|): absolute near the origin,
    relative far from it.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.ndim != 1:
        raise ValueError(f"u must be a vector, got shape {u.shape}")
    h = float(h)
    if not 0.0 < h < 1.0:
        raise ValueError(f"step h must lie in (0, 1), got {h}")
    grad = np.empty_like(u)
    for i in range(u.shape[0]):
        step = h * max(1.0, abs(u[i]))
        bump = np.zeros_like(u)
        bump[i] = step
        hi = float(f(u + bump))
        lo = float(f(u - bump))
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise ValueError(f"function returned non-finite values near coordinate {i}")
        grad[i] = (hi - lo) / (2.0 * step)
    return grad


class MomentSummary(NamedTuple):
    """Sample mean, unbiased covariance, and standard error of the mean."""

    mean: np.ndarray
    cov: np.ndarray
    se_mean: np.ndarray


def mc_moments(samples):
    """Moment summary of a sample set, shape (n, d) with n >= 2.

    The covariance uses the unbiased (n - 1) normalizer and the standard
    error of the mean is sqrt(diag(cov) / n).
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError(f"need a (n, d) sample set with n >= 2, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    mean = x.mean(axis=0)
    cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    return MomentSummary(mean=mean, cov=cov, se_mean=np.sqrt(np.diag(cov) / x.shape[0]))
