"""Score and denoiser identities for exponentially tilted densities.

Tilting a base density p by exp(v.x - s*|x|^2/2) with s >= 0 yields
p*(x) proportional to p(x) * exp(v.x - s*|x|^2/2).  Under the
variance-preserving channel, the denoiser of p* at (u, sigma) equals the
denoiser of p at a shifted location u' and a reduced noise level sigma',
and the score of p* is an affine function of the score of p at the same
shifted query.  This module implements the shift map, both score forms,
the pure-linear-tilt special case, and the rho-coordinate in which
quadratic tilts act additively.

All public functions accept a single point of shape (d,) or a batch of
shape (n, d) and return matching shapes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from .errors import ConfigError, DegenerateNoiseError, DivergentTiltError
from .tweedie import check_noise_level

if TYPE_CHECKING:  # import only for annotations; models.py imports us at runtime
    from .models import ScoreModel


@dataclass(frozen=True)
class TiltParams:
    """Linear tilt vector v and quadratic tilt scale s >= 0.

    ``s = 0`` is a pure location tilt; ``v = 0, s = 0`` is the identity.
    Instances are immutable and hold a read-only copy of ``v``.
    """

    v: np.ndarray
    s: float = 0.0

    def __post_init__(self):
        v = np.array(self.v, dtype=float, copy=True)
        if v.ndim == 0:
            v = v.reshape(1)
        if v.ndim != 1 or v.shape[0] == 0 or not np.all(np.isfinite(v)):
            raise ValueError("linear tilt v must be a non-empty finite vector")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)
        s = float(self.s)
        if not np.isfinite(s) or s < 0.0:
            raise ValueError(f"quadratic tilt scale must be finite and >= 0, got {s}")
        object.__setattr__(self, "s", s)

    @property
    def dim(self):
        return self.v.shape[0]

    @property
    def is_identity(self):
        return self.s == 0.0 and not self.v.any()

    def to_dict(self):
        return {"v": self.v.tolist(), "s": self.s}

    @classmethod
    def from_dict(cls, data, path="tilt"):
        if not isinstance(data, dict):
            raise ConfigError(path, f"expected an object, got {type(data).__name__}")
        unknown = sorted(set(data) - {"v", "s"})
        if unknown:
            raise ConfigError(path, f"unknown keys: {unknown}")
        missing = sorted({"v", "s"} - set(data))
        if missing:
            raise ConfigError(path, f"missing keys: {missing}")
        if not isinstance(data["v"], list):
            raise ConfigError(f"{path}.v", "expected a list of numbers")
        if not isinstance(data["s"], (int, float)) or isinstance(data["s"], bool):
            raise ConfigError(f"{path}.s", "expected a number")
        try:
            return cls(v=np.asarray(data["v"], dtype=float), s=data["s"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(path, str(exc)) from exc


class ShiftedQuery(NamedTuple):
    """Location and noise level at which to query the base model."""

    u_prime: np.ndarray
    sigma_prime: float


def shift_map(u, sigma, tilt):
    """Shifted query (u', sigma') equivalent to the tilted query (u, sigma).

    With a = 1 - sigma^2 + s*sigma^2 and b = 1 + s*sigma^2:

        u'     = sigma^2 * v / sqrt(a*b) + sqrt((1 - sigma^2) / (a*b)) * u
        sigma' = sqrt(sigma^2 / b)

    For s = 0 the noise level is unchanged (sigma' == sigma bitwise) and the
    map is a pure location shift.  The corner (sigma = 1, s = 0, v != 0) is
    rejected: the location shift diverges there.

    Parameters
    ----------
    u : ndarray
        Query point(s), shape (d,) or (n, d).
    sigma : float
        Noise level in [0, 1].
    tilt : TiltParams

    Returns
    -------
    ShiftedQuery
        ``u_prime`` with the shape of ``u`` and ``sigma_prime`` as a float.
    """
    sigma = check_noise_level(sigma)
    u = np.asarray(u, dtype=float)
    v, s = tilt.v, tilt.s
    if s == 0.0:
        if not v.any():
            return ShiftedQuery(u, sigma)
        if sigma == 1.0:
            raise DivergentTiltError(
                "location shift of a pure linear tilt diverges at sigma=1"
            )
        return ShiftedQuery(u + (sigma**2 / np.sqrt(1.0 - sigma**2)) * v, sigma)
    sig2 = sigma**2
    a = 1.0 - sig2 + s * sig2  # > 0 for s > 0, even at sigma = 1
    b = 1.0 + s * sig2
    root_ab = np.sqrt(a * b)
    one_minus = max(1.0 - sig2, 0.0)  # guard rounding at sigma = 1
    u_prime = (sig2 / root_ab) * v + (np.sqrt(one_minus) / root_ab) * u
    return ShiftedQuery(u_prime, float(np.sqrt(sig2 / b)))


def tilted_denoiser(base, u, sigma, tilt):
    """Denoiser of the tilted density via one base-model query.

    G*[u, sigma] = F[u', sigma'] with (u', sigma') = shift_map(u, sigma, tilt):
    no correction term at all, the entire effect of the tilt is absorbed into
    where and at which noise level the base denoiser is read.
    """
    query = shift_map(u, sigma, tilt)
    return base.denoiser(query.u_prime, query.sigma_prime)


def tilted_score(base, u, sigma, tilt):
    """Score of the tilted density's noised marginal at (u, sigma).

    Uses the reduced combination, finite on all of [0, 1] whenever s > 0:

        score*(u, sigma) = sqrt(1 - sigma^2)/a * v
                         - s/a * u
                         + sqrt(1 - sigma^2)/sqrt(a*b) * score(u', sigma')

    with a = 1 - sigma^2 + s*sigma^2, b = 1 + s*sigma^2.  Endpoints: at
    sigma = 0 this is v - s*u + score(u, 0); at sigma = 1 with s > 0 the
    first and third coefficients vanish and s/a = 1, giving -u (the pure
    noise marginal is standard normal regardless of the tilt).  A pure
    linear tilt (s = 0, v != 0) diverges at sigma = 1 and is rejected.
    """
    sigma = check_noise_level(sigma)
    u = np.asarray(u, dtype=float)
    v, s = tilt.v, tilt.s
    if s == 0.0 and not v.any():
        return base.score(u, sigma)
    if s == 0.0 and sigma == 1.0:
        raise DivergentTiltError("score of a pure linear tilt diverges at sigma=1")
    query = shift_map(u, sigma, tilt)
    base_score = base.score(query.u_prime, query.sigma_prime)
    sig2 = sigma**2
    a = 1.0 - sig2 + s * sig2
    b = 1.0 + s * sig2
    root = np.sqrt(max(1.0 - sig2, 0.0))
    return (root / a) * v - (s / a) * u + (root / np.sqrt(a * b)) * base_score


def tilted_score_unreduced(base, u, sigma, tilt):
    """Score of the tilted marginal through the raw two-term form.

    score*(u, sigma) = -(u - sqrt((1-sigma^2)/(1-sigma'^2)) * u') / sigma^2
                     + sigma'^2 * sqrt(1-sigma^2)
                       / (sigma^2 * sqrt(1-sigma'^2)) * score(u', sigma')

    Algebraically identical to :func:`tilted_score` but divides by sigma^2
    and by sqrt(1 - sigma'^2), so it is only defined for sigma strictly
    inside (0, 1).  Kept as an independent cross-check of the reduced form;
    do not switch production call sites to it.
    """
    sigma = check_noise_level(sigma)
    if sigma == 0.0 or sigma == 1.0:
        raise DegenerateNoiseError(
            "raw score form needs sigma in (0, 1); use tilted_score at the endpoints"
        )
    u = np.asarray(u, dtype=float)
    query = shift_map(u, sigma, tilt)
    u_prime, sigma_prime = query
    sig2 = sigma**2
    one_minus = 1.0 - sig2
    one_minus_prime = 1.0 - sigma_prime**2
    base_score = base.score(u_prime, sigma_prime)
    drift = -(u - np.sqrt(one_minus / one_minus_prime) * u_prime) / sig2
    gain = sigma_prime**2 * np.sqrt(one_minus) / (sig2 * np.sqrt(one_minus_prime))
    return drift + gain * base_score


def linear_tilt_score(base, w, gamma, v):
    """Score of a purely linear tilt (s = 0) of the base density.

    score*(w, gamma) = v / sqrt(1 - gamma^2)
                     + score(w + gamma^2 * v / sqrt(1 - gamma^2), gamma)

    Valid for gamma in [0, 1); the coefficient diverges at gamma = 1.
    This is the s = 0 reduction of :func:`tilted_score` and is kept as a
    separately coded route for cross-checking it.
    """
    gamma = check_noise_level(gamma)
    if gamma == 1.0:
        raise DivergentTiltError("linear-tilt score diverges at gamma=1")
    w = np.asarray(w, dtype=float)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    root = np.sqrt(1.0 - gamma**2)
    return v / root + base.score(w + (gamma**2 / root) * v, gamma)


def sigma_to_rho(sigma):
    """Coordinate rho = 1/sigma^2 - 1, in which quadratic tilts act additively.

    rho decreases from +inf (sigma -> 0) to 0 (sigma = 1); sigma = 0 itself
    is rejected.
    """
    sigma = check_noise_level(sigma)
    if sigma == 0.0:
        raise DegenerateNoiseError("rho is infinite at sigma=0")
    return 1.0 / sigma**2 - 1.0


def rho_to_sigma(rho):
    """Inverse coordinate map sigma = 1/sqrt(1 + rho), for rho >= 0."""
    rho = float(rho)
    if not (rho >= 0.0 and np.isfinite(rho)):
        raise ValueError(f"rho must be finite and >= 0, got {rho}")
    return float(1.0 / np.sqrt(1.0 + rho))


def rho_shift(rho, s):
    """Noise-coordinate action of a quadratic tilt of scale s: rho + s.

    This is exactly the sigma' map of :func:`shift_map` read in the rho
    coordinate, which is why composing quadratic tilts adds their scales.
    """
    rho = float(rho)
    s = float(s)
    if rho < 0.0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    if s < 0.0:
        raise ValueError(f"quadratic tilt scale must be >= 0, got {s}")
    return rho + s
