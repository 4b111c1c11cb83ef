"""Weak-coupling equations of motion for one- and two-time correlations.

All ``dim**2 x dim**2`` basis-pair correlations ``C[mu, nu] = <B_mu(t') B_nu(t)>``
are evolved together, because the memory term that couples the two times
mixes pairs. ``Mode.QRT_TRUNCATED`` drops that term, which reproduces the
quantum-regression-theorem prediction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from mtcf.bath import Bath, kernel_integral, memory_coefficient
from mtcf.core import OperatorBasis, SystemSpec, commutator, dag, default_basis, eigen_decompose
from mtcf.integrate import rk4_grid

COMMUTATOR_TOL = 1e-12


class Mode(enum.Enum):
    FULL = "full"
    QRT_TRUNCATED = "qrt_truncated"


class WeakCouplingModel:
    """Generator matrices of the weak-coupling equations in an operator basis.

    Parameters
    ----------
    sys : SystemSpec
        System; its ``coupling_scale`` rescales ``bath``.
    bath : DiscreteBath or ExponentialBCF
        Unscaled bath.
    basis : OperatorBasis, optional
        Defaults to ``(I, sigma_x, sigma_y, sigma_z)`` for a qubit.
    """

    def __init__(self, sys: SystemSpec, bath: Bath, basis: OperatorBasis | None = None):
        self.sys = sys
        self.bath = bath.scaled(sys.coupling_scale)
        self.basis = basis or default_basis(sys.dim)
        if self.basis.dim != sys.dim:
            raise ValueError("basis dimension does not match the system")
        H, L = sys.h_sys, sys.coupling
        Ld = dag(L)
        self.components = eigen_decompose(sys, L)
        B = self.basis
        self.g0 = B.expand_map(lambda x: 1j * commutator(H, x))
        self.p = [B.expand_map(lambda x, c=c: dag(c.operator) @ commutator(x, L)) for c in self.components]
        self.q = [B.expand_map(lambda x, c=c: commutator(Ld, x) @ c.operator) for c in self.components]
        self.a = B.expand_map(lambda x: commutator(Ld, x))
        self.b = [B.expand_map(lambda x, c=c: commutator(x, c.operator)) for c in self.components]
        self.table = B.product_table()

    # -- kernels -----------------------------------------------------------
    def memory(self, s):
        """``m_k(s) = int_0^s alpha(s - tau) exp(-i Omega_k (tau - s)) dtau`` per component."""
        return np.array([memory_coefficient(self.bath, c.frequency, 0.0, s, s) for c in self.components])

    def kernel_S2(self, s) -> np.ndarray:
        """``int_0^s alpha(s - tau) V_{tau - s} L dtau``."""
        m = self.memory(s)
        return sum((mk * c.operator for mk, c in zip(m, self.components)),
                   np.zeros_like(self.sys.coupling))

    def kernel_S1(self, s) -> np.ndarray:
        """``int_0^s conj(alpha(s - tau)) V_{tau - s} L^dag dtau``."""
        m = self.memory(s)
        return sum((np.conj(mk) * dag(c.operator) for mk, c in zip(m, self.components)),
                   np.zeros_like(self.sys.coupling))

    def cross_kernel(self, t_prime, t):
        """``h_k(t', t) = int_0^t alpha(t' - tau) exp(-i Omega_k (tau - t)) dtau``."""
        return np.array([kernel_integral(self.bath, c.frequency, 0.0, t, t_prime, t)
                         for c in self.components])

    def generator(self, s) -> np.ndarray:
        """``G(s)`` with ``d v / ds = G(s) v`` for ``v_mu = <B_mu(s)>``."""
        g = self.g0.copy()
        for mk, p, q in zip(self.memory(s), self.p, self.q):
            g += np.conj(mk) * p + mk * q
        return g

    # -- evolution ---------------------------------------------------------
    def initial_expectations(self) -> np.ndarray:
        psi = self.sys.psi0
        return np.array([np.vdot(psi, b @ psi) for b in self.basis.elements])

    def one_time(self, times, dt: float) -> np.ndarray:
        """``v_mu(s)`` at each of the sorted ``times`` (from ``s = 0``)."""
        return rk4_grid(lambda s, v: self.generator(s) @ v, self.initial_expectations(), 0.0, times, dt)

    def two_time(self, t: float, t_prime_grid, dt: float, mode: Mode = Mode.FULL) -> np.ndarray:
        """``C[mu, nu](t', t)`` for each ``t'`` in the sorted ``t_prime_grid`` (all ``>= t``)."""
        v_t = self.one_time([t], dt)[0]
        c0 = np.tensordot(self.table, v_t, axes=(2, 0))
        full = mode is Mode.FULL

        def rhs(tp, c):
            out = self.generator(tp) @ c
            if full:
                for hk, bk in zip(self.cross_kernel(tp, t), self.b):
                    out = out + hk * (self.a @ c @ bk.T)
            return out

        return rk4_grid(rhs, c0, t, t_prime_grid, dt)


def one_time_evolve(sys: SystemSpec, bath: Bath, t_end: float, dt: float, n_out: int = 101):
    """Expectation vector trajectory on an even grid over ``[0, t_end]``."""
    times = np.linspace(0.0, t_end, n_out)
    return times, WeakCouplingModel(sys, bath).one_time(times, dt)


@dataclass
class TwoTimeResult:
    """Basis-resolved two-time correlations on a grid of later times."""

    t: float
    t_prime: np.ndarray
    C: np.ndarray
    basis: OperatorBasis

    def correlation(self, A, B) -> np.ndarray:
        """``<A(t') B(t)>`` for operators ``A``, ``B``."""
        xa = self.basis.expand(A)
        xb = self.basis.expand(B)
        return np.einsum("m,gmn,n->g", xa, self.C, xb)


def two_time_evolve(sys: SystemSpec, bath: Bath, t: float, t_prime, dt: float,
                    mode: Mode = Mode.FULL) -> TwoTimeResult:
    """Integrate the two-time system from ``t' = t`` and sample at ``t_prime``.

    ``t_prime`` is either a sorted array of later times or a scalar end time,
    in which case the result is sampled at every integrator step.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if np.ndim(t_prime) == 0:
        if t_prime < t:
            raise ValueError("t_prime_end must be >= t")
        n = max(int(np.ceil((t_prime - t) / dt - 1e-9)), 1)
        grid = np.linspace(t, t_prime, n + 1)
    else:
        grid = np.asarray(t_prime, dtype=float)
        if grid.size and grid[0] < t:
            raise ValueError("t_prime grid must start at or after t")
    model = WeakCouplingModel(sys, bath)
    return TwoTimeResult(t, grid, model.two_time(t, grid, dt, mode), model.basis)


@dataclass(frozen=True)
class QRTReport:
    a_commutator_zero: bool
    b_commutator_zero: bool
    qrt_predicted_valid: bool


def qrt_condition_check(sys: SystemSpec, A, B) -> QRTReport:
    """Whether the cross-time memory term vanishes for the pair ``(A, B)``.

    ``[L^dag, A] = 0`` or ``[B, L_k] = 0`` for every eigen-component ``L_k``.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    a_zero = np.linalg.norm(commutator(dag(sys.coupling), A)) < COMMUTATOR_TOL
    b_zero = all(np.linalg.norm(commutator(B, c.operator)) < COMMUTATOR_TOL
                 for c in eigen_decompose(sys, sys.coupling))
    return QRTReport(bool(a_zero), bool(b_zero), bool(a_zero or b_zero))
