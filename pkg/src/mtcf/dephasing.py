"""Closed forms for the pure-dephasing qubit ``L = sigma_z``, ``H_S = (omega/2) sigma_z``.

Off-diagonal observables are parametrized as ``[[0, alpha], [beta, 0]]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from mtcf.bath import Bath, double_integral_I

Bound = Union[str, float]


@dataclass(frozen=True)
class DephasingScenario:
    omega: float
    bath: Bath
    psi01: complex
    psi02: complex
    a_alpha: complex = 1.0
    a_beta: complex = 1.0
    b_alpha: complex | None = None
    b_beta: complex | None = None
    coupling_scale: float = 1.0

    def __post_init__(self):
        if abs(abs(self.psi01) ** 2 + abs(self.psi02) ** 2 - 1.0) > 1e-12:
            raise ValueError("initial state must be normalized")

    @property
    def scaled_bath(self) -> Bath:
        return self.bath.scaled(self.coupling_scale)


def offdiag(alpha: complex, beta: complex) -> np.ndarray:
    return np.array([[0, alpha], [beta, 0]], dtype=complex)


def decoherence_exponent(sc: DephasingScenario, t):
    """``I_00^{tt}``; real and non-negative for a discrete bath."""
    return double_integral_I(sc.scaled_bath, 0.0, t, 0.0, t)


def c_offdiag_sigmaz(sc: DephasingScenario, t_prime, t=0.0):
    """``<A(t') sigma_z(t)>`` for off-diagonal ``A``; independent of ``t``."""
    t_prime = np.asarray(t_prime, dtype=float)
    damp = np.exp(-2 * decoherence_exponent(sc, t_prime))
    p1, p2 = sc.psi01, sc.psi02
    w = sc.omega
    return damp * (sc.a_beta * np.conj(p2) * p1 * np.exp(-1j * w * t_prime)
                   - sc.a_alpha * np.conj(p1) * p2 * np.exp(1j * w * t_prime))


def c_sigmaz_sigmaz(sc: DephasingScenario, t_prime, t=0.0):
    """``sigma_z`` is conserved, so the correlation is identically one."""
    return np.ones_like(np.asarray(t_prime, dtype=complex))


class ITerm(NamedTuple):
    """``coef * I_{lo_tau, lo_s}^{hi_tau, hi_s}`` of ``alpha`` or its conjugate.

    Bounds are numbers or one of the symbols ``"0"``, ``"t"``, ``"t'"``, ``"tau"``.
    """

    coef: complex
    lo_tau: Bound
    hi_tau: Bound
    lo_s: Bound
    hi_s: Bound
    conjugate: bool = False


@dataclass(frozen=True)
class DTildeExpression:
    """Signed sum of double integrals of the bath correlation function."""

    terms: tuple

    def evaluate(self, bath: Bath, t_prime: float, t: float, tau: float | None = None) -> complex:
        env = {"0": 0.0, "t": t, "t'": t_prime}
        if tau is not None:
            env["tau"] = tau

        def val(b):
            if isinstance(b, str):
                if b not in env:
                    raise ValueError(f"unbound symbol {b!r} in exponent")
                return env[b]
            return float(b)

        total = 0.0 + 0.0j
        for term in self.terms:
            v = double_integral_I(bath, val(term.lo_tau), val(term.hi_tau), val(term.lo_s), val(term.hi_s))
            total += term.coef * (np.conj(v) if term.conjugate else v)
        return complex(total)


def printed_dtilde() -> DTildeExpression:
    """The exponent combination as published; ``tau`` must be supplied on evaluation."""
    return DTildeExpression((
        ITerm(1, "0", "t'", "0", "tau", True),
        ITerm(1, "t", "t'", "t", "tau"),
        ITerm(1, "0", "t", "0", "tau"),
        ITerm(1, "0", "t'", "t", "t'"),
        ITerm(-1, "t", "t'", "0", "t"),
        ITerm(-1, "0", "t'", "0", "t"),
    ))


def exact_dtilde() -> DTildeExpression:
    """Exponent obtained from the displaced-oscillator algebra of the bath.

    ``-2 I_{tt}^{t't'} + 2 I_{t0}^{t't} - 2 I_{0t}^{tt'}``: the bath is kicked
    one way on ``[0, t]``, the other way on ``[t, t']`` and returned along
    ``[0, t']``.
    """
    return DTildeExpression((
        ITerm(-2, "t", "t'", "t", "t'"),
        ITerm(2, "t", "t'", "0", "t"),
        ITerm(-2, "0", "t", "t", "t'"),
    ))


def c_offdiag_offdiag(sc: DephasingScenario, t_prime: float, t: float,
                      dtilde: DTildeExpression | None = None, tau: float | None = None) -> complex:
    """``<A(t') B(t)>`` for off-diagonal ``A`` and ``B``.

    The exponent defaults to :func:`exact_dtilde`.
    """
    if t_prime < t or t < 0:
        raise ValueError("need t' >= t >= 0")
    if sc.b_alpha is None or sc.b_beta is None:
        raise ValueError("scenario has no B parameters")
    dt_expr = exact_dtilde() if dtilde is None else dtilde
    d = dt_expr.evaluate(sc.scaled_bath, t_prime, t, tau)
    w = sc.omega
    return complex(np.exp(d) * (sc.a_alpha * sc.b_beta * abs(sc.psi01) ** 2 * np.exp(1j * w * (t_prime - t))
                                + sc.b_alpha * sc.a_beta * abs(sc.psi02) ** 2 * np.exp(-1j * w * (t_prime - t))))
