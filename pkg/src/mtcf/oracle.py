"""Exact reference: system plus a few bath modes on a truncated Fock space."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from mtcf.bath import DiscreteBath
from mtcf.core import SystemSpec, dag

DEFAULT_CAP = 2 * 31**2
MAX_MODES = 3


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FockTruncation:
    """Occupation cutoff per mode (``n_max`` applies to all modes if an int)."""

    n_max: int | Sequence[int] = 30
    cap: int = DEFAULT_CAP
    leakage_threshold: float = 1e-8

    def cutoffs(self, n_modes: int) -> list[int]:
        if isinstance(self.n_max, (int, np.integer)):
            return [int(self.n_max)] * n_modes
        cut = [int(n) for n in self.n_max]
        if len(cut) != n_modes:
            raise ValueError("one cutoff per mode required")
        return cut

    def total_dim(self, dim_sys: int, n_modes: int) -> int:
        return dim_sys * math.prod(n + 1 for n in self.cutoffs(n_modes))


def _destroy(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), 1).astype(complex)


def _kron_all(ops):
    return reduce(np.kron, ops)


def build_hamiltonian(sys: SystemSpec, bath: DiscreteBath, trunc: FockTruncation) -> np.ndarray:
    """Full Hamiltonian on system (x) mode_1 (x) ... (x) mode_n, system index slowest.

    ``bath`` is unscaled; the interaction carries ``sys.coupling_scale``.
    """
    if bath.n_modes > MAX_MODES:
        raise ValueError(f"oracle supports at most {MAX_MODES} modes")
    total = trunc.total_dim(sys.dim, bath.n_modes)
    if total > trunc.cap:
        raise ValueError(f"Fock space dimension {total} exceeds cap {trunc.cap}")
    cut = trunc.cutoffs(bath.n_modes)
    eyes = [np.eye(n + 1, dtype=complex) for n in cut]
    L = sys.coupling
    H = _kron_all([sys.h_sys] + eyes)
    lam = sys.coupling_scale
    for k, (g, w) in enumerate(zip(bath.couplings, bath.frequencies)):
        a = _destroy(cut[k])
        a_full = _kron_all([np.eye(sys.dim)] + [a if j == k else eyes[j] for j in range(len(cut))])
        H = H + w * _kron_all([np.eye(sys.dim)] + [dag(a) @ a if j == k else eyes[j]
                                                    for j in range(len(cut))])
        Lfull = _kron_all([L] + eyes)
        H = H + lam * (g * Lfull @ dag(a_full) + np.conj(g) * dag(Lfull) @ a_full)
    return H


def coherent_state(z: complex, n_max: int) -> np.ndarray:
    """Normalized coherent state truncated at ``n_max`` and renormalized."""
    amp = np.empty(n_max + 1, dtype=complex)
    amp[0] = 1.0
    for n in range(1, n_max + 1):
        amp[n] = amp[n - 1] * z / math.sqrt(n)
    return amp / np.linalg.norm(amp)


class FockOracle:
    """Dense eigendecomposition of the full Hamiltonian, reused for all times."""

    def __init__(self, sys: SystemSpec, bath: DiscreteBath, trunc: FockTruncation = FockTruncation(),
                 z0=None):
        self.sys = sys
        self.bath = bath
        self.trunc = trunc
        self.cut = trunc.cutoffs(bath.n_modes)
        H = build_hamiltonian(sys, bath, trunc)
        self.energies, self.vecs = np.linalg.eigh(H)
        z0 = np.zeros(bath.n_modes) if z0 is None else np.asarray(z0, dtype=complex)
        env = _kron_all([np.ones(1, complex)] + [coherent_state(z, n) for z, n in zip(z0, self.cut)])
        self.psi0 = np.kron(sys.psi0, env)
        self.max_leakage = 0.0

    @property
    def dim(self) -> int:
        return len(self.energies)

    def evolve(self, psi: np.ndarray, t: float) -> np.ndarray:
        """``exp(-i H t) psi`` for one state or a column stack."""
        c = dag(self.vecs) @ psi
        phase = np.exp(-1j * self.energies * t)
        c = c * (phase if c.ndim == 1 else phase[:, None])
        return self.vecs @ c

    def lift(self, a: np.ndarray) -> np.ndarray:
        return np.kron(a, np.eye(self.dim // self.sys.dim))

    def leakage(self, psi: np.ndarray) -> float:
        """Largest probability weight on the top Fock level of any mode."""
        shape = [self.sys.dim] + [n + 1 for n in self.cut]
        p = np.abs(psi.reshape(shape)) ** 2
        worst = 0.0
        for k in range(len(self.cut)):
            worst = max(worst, float(np.take(p, -1, axis=k + 1).sum()))
        return worst

    def _track(self, psi):
        leak = self.leakage(psi)
        self.max_leakage = max(self.max_leakage, leak)

    def correlation(self, observables, times) -> np.ndarray:
        """``<Psi_0| A_1(t_1) ... A_N(t_N) |Psi_0>``; ``times[0]`` may be an array."""
        obs = [self.lift(np.asarray(a, dtype=complex)) for a in observables]
        N = len(obs)
        if len(times) != N:
            raise ValueError("need one time per observable")
        grid = np.atleast_1d(np.asarray(times[0], dtype=float))
        chain = [float(t) for t in times[1:]] + [0.0]
        if any(b > a for a, b in zip(chain, chain[1:])) or np.any(grid < chain[0]):
            raise ValueError("times must be decreasing")
        phi = self.psi0
        for i in range(N - 1, 0, -1):
            phi = obs[i] @ self.evolve(phi, chain[i - 1] - chain[i])
            self._track(phi)
        out = np.empty(len(grid), dtype=complex)
        for j, t1 in enumerate(grid):
            ket = obs[0] @ self.evolve(phi, t1 - chain[0])
            bra = self.evolve(self.psi0, t1)
            self._track(ket)
            self._track(bra)
            out[j] = np.vdot(bra, ket)
        if self.max_leakage > self.trunc.leakage_threshold:
            warnings.warn(f"Fock truncation leakage {self.max_leakage:.3g} exceeds "
                          f"{self.trunc.leakage_threshold:.3g}", TruncationWarning, stacklevel=2)
        return out


def oracle_correlation(sys: SystemSpec, bath: DiscreteBath, trunc: FockTruncation, observables,
                       times, z0=None) -> np.ndarray:
    return FockOracle(sys, bath, trunc, z0).correlation(observables, times)
