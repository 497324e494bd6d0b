"""Synthetic compressed-sensing instances with an uncertain matrix.

Random streams
--------------
All randomness comes from PCG64 generators.  ``SeedSequence(seed).spawn(4)``
yields four independent children used, in this order, for the true matrix
``F0``, the matrix corruption ``X``, the measurement noise ``xi`` and the
signal ``s``.  Changing one of the shapes therefore never perturbs the other
streams' draws.

File format
-----------
::

    b"AMPU1"
    header   <q version> <q N> <q M> <d delta> <d eta> <d rho> <Q seed>
    payload  f0 (M*N <d, row-major), fprime (M*N), s (N), y (M)
    trailer  <Q checksum>   first 8 bytes of blake2b over header + payload

``f`` is recomputed from ``fprime`` on load.
"""
import hashlib
import math
import os
import struct
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import (DomainError, InstanceDimensionError, InstanceFormatError,
                     MemoryBudgetError)
from .prior import SignalPrior, sample_signal

MAGIC = b"AMPU1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<qqqdddQ")
_CHECKSUM = struct.Struct("<Q")

DEFAULT_MEMORY_BUDGET = int(float(os.environ.get("AMPU_MEMORY_BUDGET", 4 * 2**30)))

# rows per block when streaming over the matrix
_BLOCK_BYTES = 32 * 2**20


@dataclass(frozen=True)
class NoiseModel:
    delta: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        for name in ("delta", "eta"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be finite and >= 0, got {v!r}")

    @property
    def D(self) -> float:
        return self.eta / (1.0 + self.eta)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """One draw of ``(F0, F', s, y)``.

    ``f`` (the posterior mean of ``F0`` given ``F'``) is derived on access
    rather than stored; solvers should use :attr:`fprime` together with
    :attr:`f_scale` to avoid materialising a third dense matrix.
    """

    f0: Optional[np.ndarray]
    fprime: np.ndarray
    s: np.ndarray
    y: np.ndarray
    noise: NoiseModel
    rho: float
    seed: int

    @property
    def n(self) -> int:
        return self.fprime.shape[1]

    @property
    def m(self) -> int:
        return self.fprime.shape[0]

    @property
    def alpha(self) -> float:
        return self.m / self.n

    @property
    def f_scale(self) -> float:
        return (1.0 + self.noise.eta) ** -0.5

    @property
    def f(self) -> np.ndarray:
        return self.fprime * self.f_scale

    @property
    def entry_variance(self) -> float:
        """Posterior variance of each entry of ``F0`` given ``F'``."""
        return self.noise.eta / (self.n * (1.0 + self.noise.eta))

    @cached_property
    def col_sq_norms(self) -> np.ndarray:
        """``sum_mu F[mu, i]**2`` for the posterior-mean matrix ``F``."""
        out = np.zeros(self.n)
        for rows in row_blocks(self.m, self.n):
            block = self.fprime[rows]
            out += np.einsum("ij,ij->j", block, block)
        return out * self.f_scale ** 2

    def block_rows(self):
        return row_blocks(self.m, self.n)


def row_blocks(m, n):
    step = max(1, _BLOCK_BYTES // (8 * max(n, 1)))
    return [slice(r, min(r + step, m)) for r in range(0, m, step)]


def n_measurements(n: int, alpha: float) -> int:
    """``M = round(alpha * N)`` (Python's round-half-to-even)."""
    return int(round(alpha * n))


def generate(n: int, alpha: float, prior: SignalPrior, noise: NoiseModel, seed: int,
             memory_budget: Optional[int] = None, keep_f0: bool = True) -> ProblemInstance:
    """Draw an instance with ``M = round(alpha N)`` measurements.

    With ``keep_f0=False`` the true matrix is dropped once ``y`` is formed,
    halving the resident size; solvers never read it.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if not (np.isfinite(alpha) and alpha > 0):
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    n = int(n)
    m = n_measurements(n, alpha)
    if m < 1:
        raise DomainError(f"alpha * n rounds to {m} measurements")
    budget = DEFAULT_MEMORY_BUDGET if memory_budget is None else memory_budget
    need = (2 if keep_f0 else 1) * m * n * 8
    if need > budget:
        raise MemoryBudgetError(
            f"instance {m}x{n} needs {need / 2**30:.2f} GiB, budget is {budget / 2**30:.2f} GiB")

    seed = int(seed)
    f0_ss, x_ss, xi_ss, s_ss = np.random.SeedSequence(seed).spawn(4)
    f0_rng = np.random.default_rng(f0_ss)
    x_rng = np.random.default_rng(x_ss)
    xi = np.random.default_rng(xi_ss).standard_normal(m) * math.sqrt(noise.delta)
    s = sample_signal(prior, n, s_ss)

    # Row blocks consume each stream in the same order as one full draw, so
    # the result does not depend on the block size.
    f0 = np.empty((m, n)) if keep_f0 else None
    fprime = np.empty((m, n))
    y = np.empty(m)
    for rows in row_blocks(m, n):
        f0_blk = f0_rng.standard_normal((rows.stop - rows.start, n))
        f0_blk *= 1.0 / math.sqrt(n)
        # fprime = (f0 + sqrt(eta) X) / sqrt(1 + eta)
        blk = fprime[rows]
        x_rng.standard_normal(out=blk)
        blk *= math.sqrt(noise.eta / n)
        blk += f0_blk
        blk *= (1.0 + noise.eta) ** -0.5
        y[rows] = f0_blk @ s
        if keep_f0:
            f0[rows] = f0_blk
    y += xi
    return ProblemInstance(f0, fprime, s, y, noise, float(prior.rho), seed)


def _checksum(data: bytes) -> int:
    return _CHECKSUM.unpack(hashlib.blake2b(data, digest_size=8).digest())[0]


def save_instance(inst: ProblemInstance, path) -> None:
    if inst.f0 is None:
        raise InstanceFormatError("cannot save an instance generated with keep_f0=False")
    header = _HEADER.pack(FORMAT_VERSION, inst.n, inst.m, inst.noise.delta,
                          inst.noise.eta, inst.rho, inst.seed)
    h = hashlib.blake2b(digest_size=8)
    tmp = f"{os.fspath(path)}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        blocks = inst.block_rows()
        chunks = [header]
        chunks += [inst.f0[rows] for rows in blocks]
        chunks += [inst.fprime[rows] for rows in blocks]
        chunks += [inst.s, inst.y]
        for chunk in chunks:
            if not isinstance(chunk, bytes):
                chunk = _le_bytes(chunk)
            h.update(chunk)
            fh.write(chunk)
        fh.write(h.digest())
    os.replace(tmp, path)


def _le_bytes(arr):
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def load_instance(path) -> ProblemInstance:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:len(MAGIC)] != MAGIC:
        raise InstanceFormatError(f"{path}: not an instance file (bad magic)")
    if len(raw) < len(MAGIC) + _HEADER.size + _CHECKSUM.size:
        raise InstanceFormatError(f"{path}: truncated header")
    body, trailer = raw[len(MAGIC):-_CHECKSUM.size], raw[-_CHECKSUM.size:]
    if _checksum(body) != _CHECKSUM.unpack(trailer)[0]:
        raise InstanceFormatError(f"{path}: checksum mismatch (truncated or corrupt file)")

    version, n, m, delta, eta, rho, seed = _HEADER.unpack_from(body)
    if version != FORMAT_VERSION:
        raise InstanceFormatError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    if n < 1 or m < 1:
        raise InstanceDimensionError(f"{path}: bad dimensions N={n}, M={m}")
    payload = body[_HEADER.size:]
    expected = 8 * (2 * m * n + n + m)
    if len(payload) != expected:
        raise InstanceDimensionError(
            f"{path}: header says N={n}, M={m} ({expected} payload bytes), "
            f"file holds {len(payload)}")

    values = np.frombuffer(payload, dtype="<f8").astype(float)
    f0 = values[:m * n].reshape(m, n)
    fprime = values[m * n:2 * m * n].reshape(m, n)
    s = values[2 * m * n:2 * m * n + n]
    y = values[2 * m * n + n:]
    return ProblemInstance(f0, fprime, s, y, NoiseModel(delta, eta), rho, seed)
