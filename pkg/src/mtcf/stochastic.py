"""Monte-Carlo estimator of multiple-time correlation functions.

Each trajectory draws one complex Gaussian label vector per bath mode for every
intermediate time, propagates the system state with the reduced propagator
between consecutive times and closes the chain with the adjoint of a forward
propagation from ``0``. Trajectories are integrated in fixed-size batches; the
batch layout does not depend on the number of workers, so results are
bit-identical for any ``workers`` value.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from mtcf.bath import DiscreteBath, memory_coefficient
from mtcf.core import EigenComponent, SystemSpec, commutator, dag, eigen_decompose

DEFAULT_BATCH = 4096
MAX_STAGE_CHUNK = 512
OVERFLOW_FRACTION = 1e-3


class OStrategy(enum.Enum):
    """Closure of the memory term of the reduced-propagator equation."""

    COMMUTING = "commuting"
    ZEROTH_ORDER = "zeroth_order"


class NonFiniteStateError(FloatingPointError):
    def __init__(self, message, seeds=()):
        super().__init__(message)
        self.seeds = tuple(seeds)


class OverflowAbort(RuntimeError):
    """Too many trajectories produced non-finite samples."""

    def __init__(self, n_bad, n_traj, indices):
        super().__init__(f"{n_bad} of {n_traj} trajectories overflowed "
                         f"(first indices: {list(indices)[:10]})")
        self.n_bad = n_bad
        self.n_traj = n_traj
        self.indices = list(indices)


def o_components(sys: SystemSpec, strategy: OStrategy) -> list[EigenComponent]:
    """Eigen-components used to close the memory integral."""
    L = sys.coupling
    if strategy is OStrategy.COMMUTING:
        if np.linalg.norm(commutator(sys.h_sys, L)) >= 1e-12:
            raise ValueError("COMMUTING strategy requires [H_S, L] = 0")
        return [EigenComponent(0.0, L)]
    return eigen_decompose(sys, L)


def default_dt(bath: DiscreteBath) -> float:
    wmax = np.max(np.abs(bath.frequencies)) if bath.n_modes else 0.0
    return 1e-3 * min(1.0, 2 * np.pi / wmax) if wmax > 0 else 1e-3


@dataclass(frozen=True)
class NoiseLabels:
    """Coherent-state labels; row ``i`` is ``z_i``, row 0 the initial bath label."""

    labels: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.labels.shape[1]

    @property
    def N(self) -> int:
        return self.labels.shape[0] - 1

    def __getitem__(self, i):
        return self.labels[i]


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one trajectory, keyed by ``(seed, index)``."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), int(index)]))


def sample_labels(rng: np.random.Generator, n_modes: int, N: int, z0=None) -> NoiseLabels:
    """Draw ``z_1 .. z_N`` from the Gaussian measure ``exp(-|z|^2) d^2z / pi``."""
    z = np.empty((N + 1, n_modes), dtype=complex)
    z[0] = 0.0 if z0 is None else np.asarray(z0, dtype=complex)
    draws = rng.standard_normal((N, n_modes, 2)) * np.sqrt(0.5)
    z[1:] = draws[..., 0] + 1j * draws[..., 1]
    return NoiseLabels(z)


def _mode_weights(bath: DiscreteBath, t) -> np.ndarray:
    """``u_n(t) = i conj(g_n) exp(-i omega_n t)``, so that ``z_t = z . u(t)``."""
    return 1j * np.conj(bath.couplings) * np.exp(-1j * np.multiply.outer(t, bath.frequencies))


def noise_eval(labels, bath: DiscreteBath, t):
    """Driving function ``z_t = i sum_n conj(g_n) z_n exp(-i omega_n t)``.

    Its average ``M[z_t conj(z_s)]`` over the Gaussian labels is ``alpha(t - s)``.
    """
    if not isinstance(bath, DiscreteBath):
        raise TypeError("noise driving requires explicit bath modes")
    return _mode_weights(bath, t) @ np.asarray(labels, dtype=complex)


class _SegmentModel:
    """Everything the batched RK4 integrator needs that is shared by trajectories."""

    def __init__(self, sys: SystemSpec, bath: DiscreteBath, strategy: OStrategy):
        if not isinstance(bath, DiscreteBath):
            raise TypeError("the stochastic route requires a DiscreteBath")
        self.bath = bath.scaled(sys.coupling_scale)
        self.L = sys.coupling
        self.Ld = dag(sys.coupling)
        self.h0 = -1j * sys.h_sys
        comps = o_components(sys, strategy)
        self.freqs = [c.frequency for c in comps]
        self.mem_ops = np.array([self.Ld @ c.operator for c in comps]) if comps else np.zeros((0,) + self.L.shape)

    def deterministic(self, t_start: float, times: np.ndarray) -> np.ndarray:
        """``-i H_S - sum_k m_k(t) L^dag L_k`` at each of ``times``."""
        gen = np.broadcast_to(self.h0, (len(times),) + self.h0.shape).copy()
        for om, op in zip(self.freqs, self.mem_ops):
            m = memory_coefficient(self.bath, om, t_start, times, times)
            gen -= np.multiply.outer(m, op)
        return gen

    def drives(self, times, z_bra, z_ket):
        """Per-trajectory ``conj(z_bra,t)`` and ``z_ket,t`` on ``times``."""
        u = _mode_weights(self.bath, times)
        return np.conj(z_bra) @ np.conj(u).T, z_ket @ u.T

    def integrate(self, t_start, out_times, z_bra, z_ket, psi, dt):
        """Propagate ``psi`` (K, dim) from ``t_start``; states at ``out_times``.

        The initial condition carries the overlap ``exp(conj(z_bra) . z_ket)``.
        """
        out_times = np.atleast_1d(np.asarray(out_times, dtype=float))
        if np.any(np.diff(out_times) < 0) or out_times[0] < t_start:
            raise ValueError("output times must be sorted and >= segment start")
        psi = psi * np.exp(np.sum(np.conj(z_bra) * z_ket, axis=1))[:, None]
        out = np.empty((psi.shape[0], len(out_times), psi.shape[1]), dtype=complex)
        LT, LdT = self.L.T, self.Ld.T
        t = float(t_start)
        for j, target in enumerate(out_times):
            span = target - t
            n = int(math.ceil(span / dt - 1e-9)) if span > 0 else 0
            h = span / n if n else 0.0
            done = 0
            while done < n:
                m = min(MAX_STAGE_CHUNK, n - done)
                stage_t = t + 0.5 * h * np.arange(2 * m + 1)
                gen = self.deterministic(t_start, stage_t)
                genT = np.swapaxes(gen, 1, 2)
                a, b = self.drives(stage_t, z_bra, z_ket)

                def f(y, q):
                    return y @ genT[q] + a[:, q, None] * (y @ LT) - b[:, q, None] * (y @ LdT)

                for step in range(m):
                    q = 2 * step
                    k1 = f(psi, q)
                    k2 = f(psi + 0.5 * h * k1, q + 1)
                    k3 = f(psi + 0.5 * h * k2, q + 1)
                    k4 = f(psi + h * k3, q + 2)
                    psi = psi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                done += m
                t = t + h * m
            t = float(target)
            out[:, j] = psi
        return out


def propagate_segment(sys: SystemSpec, bath: DiscreteBath, strategy: OStrategy, pair,
                      interval, psi_in, dt: float) -> np.ndarray:
    """Apply the reduced propagator for labels ``pair = (z_i, z_{i+1})``.

    ``interval = (t_{i+1}, t_i)``. Returns the state at ``t_i``.
    """
    t_lo, t_hi = interval
    if t_hi < t_lo:
        raise ValueError("interval must satisfy t_i >= t_{i+1}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    model = _SegmentModel(sys, bath, strategy)
    z_bra = np.atleast_2d(np.asarray(pair[0], dtype=complex))
    z_ket = np.atleast_2d(np.asarray(pair[1], dtype=complex))
    psi = np.atleast_2d(np.asarray(psi_in, dtype=complex))
    with np.errstate(over="ignore", invalid="ignore"):
        out = model.integrate(t_lo, [t_hi], z_bra, z_ket, psi, dt)[0, 0]
    if not np.all(np.isfinite(out)):
        raise NonFiniteStateError("non-finite state in segment propagation")
    return out


@dataclass
class MCEstimate:
    """Monte-Carlo mean and standard errors on a grid of first times."""

    t_grid: np.ndarray
    mean: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    n_traj: int
    seed: int
    max_abs: np.ndarray
    n_overflow: int = 0

    @property
    def stderr(self) -> np.ndarray:
        return np.hypot(self.stderr_re, self.stderr_im)


@dataclass
class _Partial:
    """Chan-style mergeable running moments for one index range."""

    n: int
    mean: np.ndarray
    m2_re: np.ndarray
    m2_im: np.ndarray
    max_abs: np.ndarray
    bad: list

    @classmethod
    def from_samples(cls, samples, first_index):
        ok = np.all(np.isfinite(samples), axis=1)
        bad = [first_index + int(i) for i in np.flatnonzero(~ok)]
        good = samples[ok]
        n = good.shape[0]
        g = samples.shape[1]
        if n == 0:
            z = np.zeros(g)
            return cls(0, np.zeros(g, complex), z, z.copy(), z.copy(), bad)
        mean = good.mean(axis=0)
        d = good - mean
        return cls(n, mean, np.sum(d.real**2, axis=0), np.sum(d.imag**2, axis=0),
                   np.max(np.abs(good), axis=0), bad)

    def merge(self, other: "_Partial") -> "_Partial":
        n = self.n + other.n
        if n == 0:
            return _Partial(0, self.mean, self.m2_re, self.m2_im, self.max_abs, self.bad + other.bad)
        delta = other.mean - self.mean
        w = other.n / n
        mean = self.mean + delta * w
        corr = self.n * other.n / n
        return _Partial(n, mean,
                        self.m2_re + other.m2_re + delta.real**2 * corr,
                        self.m2_im + other.m2_im + delta.imag**2 * corr,
                        np.maximum(self.max_abs, other.max_abs), self.bad + other.bad)


def _tree_merge(parts: Sequence[_Partial]) -> _Partial:
    if len(parts) == 1:
        return parts[0]
    mid = len(parts) // 2
    return _tree_merge(parts[:mid]).merge(_tree_merge(parts[mid:]))


@dataclass
class _Job:
    sys: SystemSpec
    bath: DiscreteBath
    strategy: OStrategy
    observables: list
    fixed_times: list
    grid: np.ndarray
    seed: int
    dt: float
    z0: np.ndarray


def _batch_samples(job: _Job, start: int, stop: int) -> np.ndarray:
    """Per-trajectory estimator values, shape (stop - start, len(grid))."""
    model = _SegmentModel(job.sys, job.bath, job.strategy)
    N = len(job.observables)
    n_modes = job.bath.n_modes
    labels = np.array([sample_labels(trajectory_rng(job.seed, j), n_modes, N, job.z0).labels
                       for j in range(start, stop)])
    K = stop - start
    psi0 = np.broadcast_to(job.sys.psi0, (K, job.sys.dim))
    # times t_1 (grid) > t_2 > ... > t_N > t_{N+1} = 0; z_{N+1} = z_0
    times = [None, None] + list(job.fixed_times) + [0.0]
    z = lambda i: labels[:, 0] if i == N + 1 else labels[:, i]
    phi = psi0
    for i in range(N, 1, -1):
        phi = model.integrate(times[i + 1], [times[i]], z(i), z(i + 1), phi, job.dt)[:, 0]
        phi = phi @ job.observables[i - 1].T
    ket = model.integrate(times[2], job.grid, z(1), z(2), phi, job.dt) @ job.observables[0].T
    bra = model.integrate(0.0, job.grid, z(1), labels[:, 0], psi0, job.dt)
    norm = np.exp(-np.sum(np.abs(job.z0) ** 2))
    with np.errstate(invalid="ignore", over="ignore"):
        return norm * np.einsum("kgd,kgd->kg", np.conj(bra), ket)


def _batch_partial(args):
    job, start, stop = args
    with np.errstate(over="ignore", invalid="ignore"):
        return _Partial.from_samples(_batch_samples(job, start, stop), start)


def mc_correlation(sys: SystemSpec, bath: DiscreteBath, strategy: OStrategy, observables,
                   times, n_traj: int, seed: int, dt: float | None = None, z0=None,
                   batch_size: int = DEFAULT_BATCH, workers: int = 1) -> MCEstimate:
    """Estimate ``<A_1(t_1) ... A_N(t_N)>`` by averaging over label draws.

    ``times[0]`` may be a sorted array of ``t_1`` values sharing the remaining
    (fixed) times; every ``t_1`` must be ``>= t_2`` and the fixed times must be
    strictly decreasing and non-negative.
    """
    obs = [np.asarray(a, dtype=complex) for a in observables]
    N = len(obs)
    if N < 1 or len(times) != N:
        raise ValueError("need one time per observable")
    grid = np.atleast_1d(np.asarray(times[0], dtype=float))
    fixed = [float(t) for t in times[1:]]
    chain = fixed + [0.0]
    if any(b >= a for a, b in zip(fixed, fixed[1:])) or (fixed and fixed[-1] < 0):
        raise ValueError("times must be strictly decreasing and non-negative")
    if np.any(np.diff(grid) <= 0) or grid[0] < chain[0]:
        raise ValueError("t_1 grid must be increasing and not below t_2")
    if n_traj <= 0:
        raise ValueError("n_traj must be positive")
    dt = default_dt(bath) if dt is None else float(dt)
    z0 = np.zeros(bath.n_modes, complex) if z0 is None else np.asarray(z0, dtype=complex)
    job = _Job(sys, bath, strategy, obs, fixed, grid, int(seed), dt, z0)
    ranges = [(job, s, min(s + batch_size, n_traj)) for s in range(0, n_traj, batch_size)]
    if workers > 1 and len(ranges) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_batch_partial, ranges))
    else:
        parts = [_batch_partial(r) for r in ranges]
    total = _tree_merge(parts)
    n_bad = len(total.bad)
    if n_bad > OVERFLOW_FRACTION * n_traj:
        raise OverflowAbort(n_bad, n_traj, total.bad)
    n = total.n
    denom = max(n * (n - 1), 1)
    return MCEstimate(grid, total.mean, np.sqrt(total.m2_re / denom), np.sqrt(total.m2_im / denom),
                      n, int(seed), total.max_abs, n_bad)
