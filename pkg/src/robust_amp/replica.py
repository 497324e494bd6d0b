"""Replica potential for sparse reconstruction under matrix uncertainty.

``potential(params, E)`` is the free-entropy-like function whose global
maximiser over the candidate error ``E`` is the Bayes-optimal MSE.  The
channel contributes

    -alpha/2 * [log(u) + (Delta + rho) / u],   u = Delta + E + (rho - E) D,

and the scalar Gauss-Bernoulli problem at effective signal-to-noise
``m = alpha (1 - D) / u`` contributes two Gaussian expectations of
``log[1 - rho + rho / sqrt(m + 1) * exp(c z^2)]`` with ``c = m / (2 (m + 1))``
(spike branch) and ``c = m / 2`` (slab branch).

The slab expectation grows like ``rho * m / 2`` and cancels against the
channel's ``(Delta + rho) / u`` piece; both are summed analytically before
any quadrature so that the returned value carries no catastrophic
cancellation when ``m`` is huge.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import _quadrature
from .errors import DegeneratePotentialError, DomainError


@dataclass(frozen=True)
class ReplicaParams:
    alpha: float
    rho: float
    delta: float
    eta: float

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError(f"alpha must be positive, got {self.alpha!r}")
        if not (np.isfinite(self.rho) and 0 < self.rho <= 1):
            raise DomainError(f"rho must lie in (0, 1], got {self.rho!r}")
        if not (np.isfinite(self.delta) and self.delta >= 0):
            raise DomainError(f"delta must be >= 0, got {self.delta!r}")
        # eta = inf is allowed: nothing is known about the matrix (D = 1)
        if not self.eta >= 0:
            raise DomainError(f"eta must be >= 0, got {self.eta!r}")

    @property
    def D(self) -> float:
        if math.isinf(self.eta):
            return 1.0
        return self.eta / (1.0 + self.eta)

    @property
    def degenerate(self) -> bool:
        return self.D == 1.0

    def effective_noise(self, e):
        """``Delta + E + (rho - E) D``: the per-measurement residual variance."""
        return self.delta + e + (self.rho - e) * self.D

    def replace(self, **changes) -> "ReplicaParams":
        values = dict(alpha=self.alpha, rho=self.rho, delta=self.delta, eta=self.eta)
        values.update(changes)
        return ReplicaParams(**values)


def _check_e(params, e):
    if not (np.isfinite(e) and 0 < e <= params.rho * (1 + 1e-12)):
        raise DomainError(f"E must lie in (0, rho={params.rho}], got {e!r}")


def m_of_E(params: ReplicaParams, e: float) -> float:
    """Effective scalar-channel signal-to-noise ratio at error ``e``."""
    u = params.effective_noise(e)
    if not u > 0:
        raise DomainError(f"non-positive effective noise {u!r} at E={e!r}")
    return params.alpha * (1.0 - params.D) / u


def _log_mix(rho, m, c):
    """Return (log-weight of the spike, log-weight of the slab at z=0, crossover)."""
    log_spike = math.log1p(-rho) if rho < 1 else -math.inf
    log_slab = math.log(rho) - 0.5 * math.log1p(m)
    zk = _quadrature.crossover(c, log_spike - log_slab)
    return log_spike, log_slab, zk


def spike_term(rho, m):
    """``E_z log[1 - rho + rho/sqrt(m+1) exp(z^2 m / (2(m+1)))]``."""
    c = m / (2.0 * (m + 1.0))
    a0, b, zk = _log_mix(rho, m, c)
    return _quadrature.gauss_even(lambda z: np.logaddexp(a0, b + c * z * z), zk,
                                  atol=1e-300)


def slab_excess(rho, m):
    """Slab-branch expectation minus its leading part ``log(rho/sqrt(m+1)) + m/2``."""
    if rho == 1.0:
        return 0.0
    c = 0.5 * m
    a0, b, zk = _log_mix(rho, m, c)
    return _quadrature.gauss_even(lambda z: np.logaddexp(0.0, a0 - b - c * z * z), zk,
                                  atol=1e-300)


def potential(params: ReplicaParams, e: float) -> float:
    """Replica potential at candidate MSE ``e``."""
    _check_e(params, e)
    alpha, rho, delta, D = params.alpha, params.rho, params.delta, params.D
    u = params.effective_noise(e)
    if D == 1.0:
        return -0.5 * alpha * (math.log(delta + rho) + 1.0)
    m = m_of_E(params, e)
    # -alpha (Delta + rho) / (2u) + rho m / 2 == -alpha (Delta + rho D) / (2u)
    value = -0.5 * alpha * (math.log(u) + (delta + rho * D) / u)
    value += rho * (math.log(rho) - 0.5 * math.log1p(m) + slab_excess(rho, m))
    if rho < 1.0:
        value += (1.0 - rho) * spike_term(rho, m)
    return value


@dataclass(frozen=True)
class Maximum:
    e: float
    phi: float
    boundary: bool = False


@dataclass
class PotentialCurve:
    params: ReplicaParams
    grid: np.ndarray
    phi: np.ndarray
    maxima: List[Maximum] = field(default_factory=list)
    flat: bool = False
    # noiseless with rho < alpha: the potential grows without bound as E -> 0
    diverges_at_zero: bool = False

    @property
    def global_max(self) -> Optional[Maximum]:
        if not self.maxima:
            return None
        if self.diverges_at_zero:
            return self.maxima[0]
        return max(self.maxima, key=lambda mx: mx.phi)

    def to_csv_rows(self):
        yield ("E", "phi")
        for e, p in zip(self.grid, self.phi):
            yield (repr(float(e)), repr(float(p)))


def default_e_min(params: ReplicaParams) -> float:
    return max(1e-12, params.delta / 10.0)


def _refine(params, lo, mid, hi, xtol):
    try:
        res = minimize_scalar(lambda e: -potential(params, e), bracket=(lo, mid, hi),
                              method="golden", options={"xtol": xtol})
        e = float(res.x)
    except ValueError:
        # plateau on the grid: the triple is not a strict bracket
        e = mid
    if not lo <= e <= hi:
        e = mid
    return Maximum(e, potential(params, e))


def scan_potential(params: ReplicaParams, n_points: int = 256,
                   e_min: Optional[float] = None, e_max: Optional[float] = None,
                   xtol: float = 1e-8) -> PotentialCurve:
    """Sample the potential on a log grid and locate its local maxima.

    Interior maxima are refined by golden-section search; a maximum sitting on
    a grid endpoint is reported as-is with ``boundary=True``.  Without any
    noise and with ``rho < alpha`` the potential behaves like
    ``(alpha - rho)/2 * log(1/E)`` near zero, so a lower-boundary maximum is
    the global one no matter what the grid floor shows.
    """
    if n_points < 64:
        raise DomainError("the potential grid needs at least 64 points")
    e_min = default_e_min(params) if e_min is None else e_min
    e_max = params.rho if e_max is None else e_max
    if not 0 < e_min < e_max <= params.rho:
        raise DomainError(f"bad E range [{e_min}, {e_max}]")
    grid = np.geomspace(e_min, e_max, n_points)
    grid[-1] = e_max
    phi = np.array([potential(params, e) for e in grid])

    spread = np.max(phi) - np.min(phi)
    if spread <= 1e-12 * max(1.0, np.max(np.abs(phi))):
        return PotentialCurve(params, grid, phi, [], flat=True)

    maxima = []
    if phi[0] > phi[1]:
        maxima.append(Maximum(float(grid[0]), float(phi[0]), boundary=True))
    for i in range(1, n_points - 1):
        if phi[i] > phi[i - 1] and phi[i] >= phi[i + 1]:
            maxima.append(_refine(params, grid[i - 1], grid[i], grid[i + 1], xtol))
    if phi[-1] > phi[-2]:
        maxima.append(Maximum(float(grid[-1]), float(phi[-1]), boundary=True))
    diverges = (params.delta == 0 and params.D == 0 and params.rho < params.alpha
                and maxima[0].boundary and maxima[0].e == grid[0])
    return PotentialCurve(params, grid, phi, maxima, diverges_at_zero=diverges)


def bayes_mse(params: ReplicaParams, **scan_kw) -> float:
    """Bayes-optimal MSE: location of the global maximum of the potential."""
    curve = scan_potential(params, **scan_kw)
    if curve.flat:
        raise DegeneratePotentialError(
            f"flat potential for {params}; no information reaches the estimator")
    return curve.global_max.e
