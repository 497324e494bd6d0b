"""Gauss-Bernoulli signal prior and its scalar Bayes denoiser.

The prior puts mass ``1 - rho`` on exactly zero and spreads ``rho`` over a
standard normal.  Under a Gaussian likelihood ``N(r; x, sigma2)`` the
posterior is again a two-component mixture, so posterior mean and variance
have a closed form.  :func:`denoise_oracle` recomputes the same moments by
brute-force quadrature and exists for testing only.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .errors import DomainError, QuadratureError

# log-odds beyond which the responsibility is exactly 0 or 1
_SATURATE = 700.0


@dataclass(frozen=True)
class SignalPrior:
    """Gauss-Bernoulli prior with density ``rho``."""

    rho: float

    def __post_init__(self):
        if not np.isfinite(self.rho) or not 0.0 <= self.rho <= 1.0:
            raise DomainError(f"rho must lie in [0, 1], got {self.rho!r}")

    @property
    def mean(self) -> float:
        return 0.0

    @property
    def variance(self) -> float:
        return float(self.rho)


class DenoiserResult(NamedTuple):
    a: np.ndarray  # posterior mean
    c: np.ndarray  # posterior variance


def _check_inputs(sigma2, r):
    sigma2 = np.asarray(sigma2, dtype=float)
    r = np.asarray(r, dtype=float)
    if not (np.all(np.isfinite(sigma2)) and np.all(np.isfinite(r))):
        raise DomainError("denoiser inputs must be finite")
    if np.any(sigma2 <= 0):
        raise DomainError("sigma2 must be strictly positive")
    return sigma2, r


def slab_log_odds(rho, sigma2, r):
    """Log-odds that an observation ``r`` came from the Gaussian component."""
    shrink = 1.0 / (1.0 + sigma2)
    return (np.log(rho) - np.log1p(-rho)
            - 0.5 * np.log1p(1.0 / sigma2)
            + 0.5 * r * r * shrink / sigma2)


def denoise(prior: SignalPrior, sigma2, r) -> DenoiserResult:
    """Posterior mean and variance of ``x`` given ``r = x + N(0, sigma2)``.

    Vectorised over ``sigma2`` and ``r`` (standard broadcasting).
    """
    sigma2, r = _check_inputs(sigma2, r)
    rho = prior.rho
    shape = np.broadcast(sigma2, r).shape
    if rho == 0.0:
        zero = np.zeros(shape)
        return DenoiserResult(zero, zero.copy())

    shrink = 1.0 / (1.0 + sigma2)
    mu = r * shrink
    var = sigma2 * shrink
    if rho == 1.0:
        pi = np.ones(shape)
        one_minus_pi = np.zeros(shape)
    else:
        with np.errstate(over="ignore"):
            logit = slab_log_odds(rho, sigma2, r)
        pi = np.where(logit > _SATURATE, 1.0,
                      np.where(logit < -_SATURATE, 0.0, expit(logit)))
        one_minus_pi = np.where(logit > _SATURATE, 0.0,
                                np.where(logit < -_SATURATE, 1.0, expit(-logit)))
    a = pi * mu
    c = pi * var + pi * one_minus_pi * mu * mu
    return DenoiserResult(a, c)


@lru_cache(maxsize=None)
def _hermite_e(n):
    # probabilists' Hermite rule: weight exp(-u^2 / 2)
    u, w = np.polynomial.hermite_e.hermegauss(n)
    return u, w / np.sqrt(2.0 * np.pi)


def _slab_moments(sigma2, r, n):
    """Integrals of x^k N(x; 0, 1) N(r; x, sigma2) for k = 0, 1, 2."""
    u, w = _hermite_e(n)
    sigma = np.sqrt(sigma2)
    if sigma <= 1.0:
        # likelihood is the narrow factor: expand around r
        x = r + sigma * u
        f = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    else:
        x = u
        f = np.exp(-0.5 * (r - x) ** 2 / sigma2) / np.sqrt(2.0 * np.pi * sigma2)
    return np.array([np.sum(w * f), np.sum(w * f * x), np.sum(w * f * x * x)])


def denoise_oracle(prior: SignalPrior, sigma2: float, r: float,
                   rtol: float = 1e-12, max_nodes: int = 4096) -> DenoiserResult:
    """Quadrature version of :func:`denoise` (scalar inputs, slow)."""
    sigma2, r = _check_inputs(sigma2, r)
    if sigma2.ndim or r.ndim:
        raise DomainError("denoise_oracle takes scalar inputs")
    sigma2, r = float(sigma2), float(r)
    rho = prior.rho

    n = 32
    prev = _slab_moments(sigma2, r, n)
    while True:
        n *= 2
        if n > max_nodes:
            raise QuadratureError(
                f"slab moments did not converge (sigma2={sigma2}, r={r})")
        cur = _slab_moments(sigma2, r, n)
        if np.all(np.abs(cur - prev) <= rtol * np.max(np.abs(cur))):
            break
        prev = cur

    # the point mass contributes its weight only to the normaliser
    spike = (1.0 - rho) * np.exp(-0.5 * r * r / sigma2) / np.sqrt(2.0 * np.pi * sigma2)
    z = spike + rho * cur[0]
    if not z > 0:
        raise QuadratureError(f"normaliser underflowed (sigma2={sigma2}, r={r})")
    a = rho * cur[1] / z
    second = rho * cur[2] / z
    return DenoiserResult(np.float64(a), np.float64(max(second - a * a, 0.0)))


def sample_signal(prior: SignalPrior, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` iid components from the prior.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    rng = np.random.default_rng(seed)
    support = rng.random(int(n)) < prior.rho
    values = rng.standard_normal(int(n))
    return np.where(support, values, 0.0)
