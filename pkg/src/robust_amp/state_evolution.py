"""Density evolution: the large-N prediction of AMP's per-iteration MSE.

One step maps the current error ``E`` to the MMSE of a scalar Gaussian
channel ``r = x + z / sqrt(m)`` with ``m = m_of_E(E)``.  The prior average
splits into the spike (``x = 0``, so ``r = z / sqrt(m)``) and the slab
(``x ~ N(0, 1)``, so ``r ~ N(0, 1 + 1/m)``); each branch is then a single
Gaussian expectation over ``z``.
"""
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from . import _quadrature
from .errors import DomainError
from .prior import SignalPrior, denoise
from .replica import ReplicaParams, _check_e, m_of_E

# below this signal-to-noise ratio 1/m overflows and the posterior is the prior
M_DEGENERATE = 1e-14


def scalar_mmse(rho: float, m: float) -> float:
    """MMSE of a Gauss-Bernoulli variable observed through ``x + z/sqrt(m)``."""
    if m < M_DEGENERATE:
        return rho
    prior = SignalPrior(rho)
    sigma2 = 1.0 / m
    level = (math.log1p(-rho) - math.log(rho) if rho < 1 else -math.inf) \
        + 0.5 * math.log1p(m)

    slab_scale = math.sqrt(1.0 + sigma2)
    slab = _quadrature.gauss_even(
        lambda z: denoise(prior, sigma2, slab_scale * z).c,
        _quadrature.crossover(0.5 * m, level), rtol=1e-12, atol=1e-300)
    if rho == 1.0:
        return slab
    spike_scale = math.sqrt(sigma2)
    spike = _quadrature.gauss_even(
        lambda z: denoise(prior, sigma2, spike_scale * z).c,
        _quadrature.crossover(m / (2.0 * (m + 1.0)), level), rtol=1e-12, atol=1e-300)
    return (1.0 - rho) * spike + rho * slab


def de_step(params: ReplicaParams, e: float) -> float:
    """One density-evolution update ``E -> mmse(m(E))``.

    Returns ``rho`` (prior variance) when the matrix carries no information.
    """
    _check_e(params, e)
    if params.degenerate:
        return params.rho
    return scalar_mmse(params.rho, m_of_E(params, e))


def predicted_v(params: ReplicaParams, e: float) -> float:
    """Large-N value of the AMP residual variance at error ``e``."""
    return params.effective_noise(e)


@dataclass
class DeTrajectory:
    params: ReplicaParams
    e_seq: List[float] = field(default_factory=list)
    converged: bool = False
    oscillating: bool = False
    degenerate: bool = False

    @property
    def fixed_point(self) -> float:
        return self.e_seq[-1]

    def to_csv_rows(self):
        yield ("t", "E")
        for t, e in enumerate(self.e_seq):
            yield (str(t), repr(float(e)))


def de_run(params: ReplicaParams, max_iters: int = 500, tol: float = 1e-10) -> DeTrajectory:
    """Iterate :func:`de_step` from ``E = rho`` until the relative change drops below ``tol``."""
    if max_iters < 1 or not tol > 0:
        raise DomainError("need max_iters >= 1 and tol > 0")
    traj = DeTrajectory(params, [float(params.rho)])
    if params.degenerate:
        traj.e_seq.append(float(params.rho))
        traj.converged = traj.degenerate = True
        return traj

    e = float(params.rho)
    for _ in range(max_iters):
        e_new = de_step(params, e)
        # the map is monotone, so E can only reach 0 by underflow
        e_new = min(max(e_new, np.finfo(float).tiny), params.rho)
        traj.e_seq.append(e_new)
        if abs(e_new - e) < tol * max(e, 1e-12):
            traj.converged = True
            break
        e = e_new

    if not traj.converged:
        steps = np.diff(traj.e_seq[-min(len(traj.e_seq), 20):])
        slack = 1e-10 * max(traj.e_seq[-1], 1e-12)
        traj.oscillating = bool(np.any(steps > slack) and np.any(steps < -slack))
    return traj
