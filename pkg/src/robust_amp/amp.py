"""Approximate message passing for sparse recovery with an uncertain matrix.

One iteration, with ``F`` the posterior-mean matrix and ``g = (y - omega) / V``
the previous residual scaled by the previous variance estimate:

1. ``omega <- F a - g * (F**2 v)``                      (Onsager-corrected fit)
2. ``V`` from the selected variance rule                (see :class:`VarianceRule`)
3. ``Sigma2_i = V / sum_mu F**2``                       (scalar ``V``)
   ``R_i = a_i + sum_mu F (y - omega) / sum_mu F**2``
4. ``a, v = f_a(Sigma2, R), f_c(Sigma2, R)``

For a per-measurement ``V_mu`` step 3 uses the weighted forms
``Sigma2_i = 1 / sum_mu F**2 / V_mu`` and
``R_i = a_i + Sigma2_i sum_mu F (y - omega) / V_mu``, which reduce to the
above when ``V`` is constant.

The robust rule estimates ``V`` as the mean square of the freshly corrected
residual ``y - omega``, so it needs neither the noise level nor the matrix
uncertainty.  At ``t = 0`` the residual is zero by initialisation and the
Onsager term vanishes, so no variance bootstrap is needed.
"""
import enum
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import DivergenceError, DomainError
from .instance import ProblemInstance
from .prior import SignalPrior, denoise


class VarianceRule(str, enum.Enum):
    ROBUST = "robust"
    MU_AMP = "mu_amp"
    KNOWN_NOISE = "known_noise"


@dataclass(frozen=True)
class AmpConfig:
    variance_rule: VarianceRule = VarianceRule.ROBUST
    max_iters: int = 1000
    tol: float = 1e-12
    damping: float = 0.0
    v_floor: float = 1e-14

    def __post_init__(self):
        object.__setattr__(self, "variance_rule", VarianceRule(self.variance_rule))
        if not self.tol > 0 or self.max_iters < 1 or not 0 <= self.damping < 1:
            raise DomainError("need tol > 0, max_iters >= 1 and 0 <= damping < 1")


@dataclass
class AmpState:
    a: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    big_v: Optional[np.ndarray]  # 0-d for the robust rule, length M otherwise
    t: int = 0


def init_state(inst: ProblemInstance, prior: SignalPrior) -> AmpState:
    return AmpState(a=np.zeros(inst.n), v=np.full(inst.n, prior.rho),
                    omega=inst.y.copy(), big_v=None, t=0)


def _forward(inst, a, v):
    """Return ``F a`` and ``F**2 v``."""
    fa = np.empty(inst.m)
    f2v = np.empty(inst.m)
    for rows in inst.block_rows():
        block = inst.fprime[rows]
        fa[rows] = block @ a
        f2v[rows] = (block * block) @ v
    k = inst.f_scale
    return fa * k, f2v * (k * k)


def _adjoint(inst, r, w=None):
    """Return ``F^T r`` and, if ``w`` is given, ``(F**2)^T w``."""
    ftr = np.zeros(inst.n)
    f2tw = np.zeros(inst.n) if w is not None else None
    for rows in inst.block_rows():
        block = inst.fprime[rows]
        ftr += r[rows] @ block
        if w is not None:
            f2tw += w[rows] @ (block * block)
    k = inst.f_scale
    return ftr * k, (f2tw * (k * k) if w is not None else None)


def measurement_update(state: AmpState, inst: ProblemInstance, cfg: AmpConfig):
    """Steps 1-2: the new ``omega`` and variance estimate ``V``."""
    fa, f2v = _forward(inst, state.a, state.v)
    if state.big_v is None:
        omega = fa
    else:
        omega = fa - (inst.y - state.omega) / state.big_v * f2v

    rule = cfg.variance_rule
    if rule is VarianceRule.ROBUST:
        resid = inst.y - omega
        big_v = np.asarray(np.dot(resid, resid) / inst.m)
    elif rule is VarianceRule.KNOWN_NOISE:
        big_v = inst.noise.delta + f2v
    else:
        second_moment = np.sum(state.v + state.a * state.a)
        big_v = inst.noise.delta + f2v + second_moment * inst.entry_variance
    return omega, np.maximum(big_v, cfg.v_floor)


def amp_step(state: AmpState, inst: ProblemInstance, prior: SignalPrior,
             cfg: AmpConfig) -> AmpState:
    if state.a.shape != (inst.n,) or state.omega.shape != (inst.m,):
        raise DomainError("state dimensions do not match the instance")
    omega, big_v = measurement_update(state, inst, cfg)
    resid = inst.y - omega
    if big_v.ndim == 0:
        colsq = inst.col_sq_norms
        ftr, _ = _adjoint(inst, resid)
        sigma2 = big_v / colsq
        r = state.a + ftr / colsq
    else:
        w = 1.0 / big_v
        ftr, colw = _adjoint(inst, resid * w, w)
        sigma2 = 1.0 / colw
        r = state.a + sigma2 * ftr

    if not (np.all(np.isfinite(sigma2)) and np.all(np.isfinite(r))):
        raise DivergenceError(f"non-finite AMP state at iteration {state.t + 1}",
                              iteration=state.t + 1)
    a, v = denoise(prior, sigma2, r)
    if cfg.damping:
        d = cfg.damping
        a = (1.0 - d) * a + d * state.a
        v = (1.0 - d) * v + d * state.v
    return AmpState(a=a, v=v, omega=omega, big_v=big_v, t=state.t + 1)


def compute_mse(estimate, truth) -> float:
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise DomainError(f"length mismatch: {estimate.shape} vs {truth.shape}")
    return float(np.mean((truth - estimate) ** 2))


@dataclass
class AmpReport:
    mse_per_iter: List[float] = field(default_factory=list)
    v_mean_per_iter: List[float] = field(default_factory=list)
    delta_a_per_iter: List[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    final_estimate: Optional[np.ndarray] = None
    final_variance: Optional[np.ndarray] = None

    @property
    def final_mse(self) -> float:
        return self.mse_per_iter[-1] if self.mse_per_iter else float("nan")

    def to_csv_rows(self):
        yield ("t", "mse", "v_mean", "delta_a")
        for t, row in enumerate(zip(self.mse_per_iter, self.v_mean_per_iter,
                                    self.delta_a_per_iter), start=1):
            yield (str(t),) + tuple(repr(float(x)) for x in row)


def amp_run(inst: ProblemInstance, prior: SignalPrior, cfg: AmpConfig = AmpConfig(),
            truth=None, state: Optional[AmpState] = None) -> AmpReport:
    """Iterate :func:`amp_step` until the mean square change of ``a`` drops below ``cfg.tol``.

    Row ``t`` of the report describes iterate ``a^t``: its MSE against
    ``truth`` (NaN without one), the variance estimate ``V`` computed from
    its residual, and the mean square change from ``a^(t-1)``.
    """
    if truth is not None and len(truth) != inst.n:
        raise DomainError("truth has the wrong length")
    state = init_state(inst, prior) if state is None else state
    report = AmpReport()
    try:
        for _ in range(cfg.max_iters):
            new = amp_step(state, inst, prior, cfg)
            if report.iterations:
                report.v_mean_per_iter.append(float(np.mean(new.big_v)))
            delta_a = float(np.mean((new.a - state.a) ** 2))
            report.delta_a_per_iter.append(delta_a)
            report.mse_per_iter.append(
                compute_mse(new.a, truth) if truth is not None else float("nan"))
            report.iterations += 1
            state = new
            if delta_a < cfg.tol:
                report.converged = True
                break
        _, big_v = measurement_update(state, inst, cfg)
        report.v_mean_per_iter.append(float(np.mean(big_v)))
    except DivergenceError as exc:
        last = next((x for x in reversed(report.mse_per_iter) if np.isfinite(x)), None)
        raise DivergenceError(str(exc), iteration=exc.iteration, last_mse=last) from exc
    report.final_estimate = state.a
    report.final_variance = state.v
    return report
