"""Independent transcriptions used as test oracles.

Written out loop by loop (AMP) or in multi-precision arithmetic (potential),
sharing no code with the package beyond the instance container.
"""
import math

import mpmath as mp
import numpy as np


def scalar_denoise(rho, s2, r):
    """Mixture posterior written out term by term."""
    if rho == 0:
        return 0.0, 0.0
    slab = rho * math.exp(-r * r / (2 * (1 + s2))) / math.sqrt(2 * math.pi * (1 + s2))
    spike = (1 - rho) * math.exp(-r * r / (2 * s2)) / math.sqrt(2 * math.pi * s2)
    pi = slab / (slab + spike)
    mu, var = r / (1 + s2), s2 / (1 + s2)
    a = pi * mu
    second = pi * (var + mu * mu)
    return a, second - a * a


def oracle_step(inst, rho, a, v, omega, big_v, rule):
    m, n = inst.m, inst.n
    F = [[inst.fprime[mu][i] / math.sqrt(1 + inst.noise.eta) for i in range(n)]
         for mu in range(m)]
    y = list(inst.y)
    new_omega = []
    for mu in range(m):
        fa = sum(F[mu][i] * a[i] for i in range(n))
        f2v = sum(F[mu][i] ** 2 * v[i] for i in range(n))
        if big_v is None:
            new_omega.append(fa)
        else:
            vm = big_v if np.ndim(big_v) == 0 else big_v[mu]
            new_omega.append(fa - (y[mu] - omega[mu]) / vm * f2v)
    if rule == "robust":
        vv = sum((y[mu] - new_omega[mu]) ** 2 for mu in range(m)) / m
        V = [vv] * m
    else:
        V = []
        for mu in range(m):
            val = inst.noise.delta + sum(F[mu][i] ** 2 * v[i] for i in range(n))
            if rule == "mu_amp":
                D = inst.noise.eta / (1 + inst.noise.eta)
                val += sum(v[i] + a[i] ** 2 for i in range(n)) * D / n
            V.append(val)
    new_a, new_v = [], []
    for i in range(n):
        s2 = 1.0 / sum(F[mu][i] ** 2 / V[mu] for mu in range(m))
        R = a[i] + s2 * sum(F[mu][i] * (y[mu] - new_omega[mu]) / V[mu] for mu in range(m))
        ai, vi = scalar_denoise(rho, s2, R)
        new_a.append(ai)
        new_v.append(vi)
    return np.array(new_a), np.array(new_v), np.array(new_omega), np.array(V)


def gauss_log_integral(weight, c, m, rho):
    """E_z log[1 - rho + rho/sqrt(m+1) exp(c z^2)] in high precision."""
    weight, c, m, rho = (mp.mpf(x) for x in (weight, c, m, rho))
    f = lambda z: mp.npdf(z) * mp.log(1 - rho + rho / mp.sqrt(m + 1) * mp.exp(c * z * z))
    # split at the crossover where the two branches of the logarithm balance
    pts = [0, 1, 2, 4, 8, 16, 40]
    if rho < 1:
        zk2 = mp.log((1 - rho) * mp.sqrt(m + 1) / rho) / c
        if zk2 > 0:
            zk = mp.sqrt(zk2)
            pts += [zk * k for k in (0.5, 0.9, 1, 1.1, 2)]
    pts = sorted(set(p for p in pts if p <= 40))
    return 2 * weight * mp.quad(f, pts)


def potential_mp(alpha, rho, delta, eta, e, dps=40):
    """Straight transcription of the potential with mpmath."""
    with mp.workdps(dps):
        alpha, rho, delta, eta, e = (mp.mpf(x) for x in (alpha, rho, delta, eta, e))
        D = eta / (1 + eta)
        u = delta + e + (rho - e) * D
        m = alpha * (1 - D) / u
        out = -alpha / 2 * (mp.log(u) + (delta + rho) / u)
        out += gauss_log_integral(1 - rho, m / (2 * (m + 1)), m, rho)
        out += gauss_log_integral(rho, m / 2, m, rho)
        return out


def potential_mp_noiseless_matrix(alpha, rho, delta, e, dps=40):
    """The known-matrix potential, written without D at all."""
    with mp.workdps(dps):
        alpha, rho, delta, e = (mp.mpf(x) for x in (alpha, rho, delta, e))
        m = alpha / (delta + e)
        out = -alpha / 2 * (mp.log(delta + e) + (delta + rho) / (delta + e))
        out += gauss_log_integral(1 - rho, m / (2 * (m + 1)), m, rho)
        out += gauss_log_integral(rho, m / 2, m, rho)
        return out
