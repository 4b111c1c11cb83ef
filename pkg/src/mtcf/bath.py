"""Bath correlation functions and their closed-form integrals.

Both bath representations reduce to a sum of exponential terms
``alpha(t) = sum_k c_k exp(-w_k t)`` for ``t >= 0`` with the Hermitian
extension ``alpha(-t) = conj(alpha(t))``. A discrete mode ``(g, omega)``
contributes ``c = |g|^2``, ``w = i omega``; for such purely imaginary rates the
extension is automatic, so every integral below is exact for either kind.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

_SMALL = 1e-2


def _phi1(z):
    """``(1 - exp(-z)) / z``, regular at 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < _SMALL
    zs = np.where(small, 1.0, z)
    direct = -np.expm1(-zs) / zs
    series = 1 - z / 2 + z**2 / 6 - z**3 / 24 + z**4 / 120 - z**5 / 720
    return np.where(small, series, direct)


def _phi2(z):
    """``(exp(-z) - 1 + z) / z^2``, regular at 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < _SMALL
    zs = np.where(small, 1.0, z)
    direct = (np.expm1(-zs) + zs) / zs**2
    series = 0.5 - z / 6 + z**2 / 24 - z**3 / 120 + z**4 / 720 - z**5 / 5040
    return np.where(small, series, direct)


class DiscreteBath:
    """Finite set of bath modes with couplings ``g_n`` and frequencies ``omega_n``.

    ``alpha(t) = sum_n |g_n|^2 exp(-i omega_n t)``. An empty bath is allowed.
    """

    def __init__(self, couplings=(), frequencies=()):
        g = np.array(couplings, dtype=complex).reshape(-1)
        w = np.array(frequencies, dtype=float).reshape(-1)
        if g.shape != w.shape:
            raise ValueError("couplings and frequencies must have equal length")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(w))):
            raise ValueError("bath parameters must be finite")
        g.flags.writeable = False
        w.flags.writeable = False
        self.couplings = g
        self.frequencies = w

    @classmethod
    def from_modes(cls, modes):
        """Build from an iterable of ``(g, omega)`` pairs."""
        modes = list(modes)
        return cls([m[0] for m in modes], [m[1] for m in modes])

    @property
    def n_modes(self) -> int:
        return len(self.frequencies)

    @property
    def weights(self) -> np.ndarray:
        return np.abs(self.couplings) ** 2

    @property
    def rates(self) -> np.ndarray:
        return 1j * self.frequencies

    def scaled(self, scale: float) -> "DiscreteBath":
        return DiscreteBath(scale * self.couplings, self.frequencies)

    def __repr__(self):
        return f"DiscreteBath(n_modes={self.n_modes})"


class ExponentialBCF:
    """``alpha(t) = sum_k c_k exp(-w_k t)`` for ``t >= 0``, ``Re w_k >= 0``."""

    def __init__(self, weights, rates):
        c = np.array(weights, dtype=complex).reshape(-1)
        w = np.array(rates, dtype=complex).reshape(-1)
        if c.shape != w.shape:
            raise ValueError("weights and rates must have equal length")
        if np.any(w.real < 0):
            raise ValueError("rates must have non-negative real part")
        c.flags.writeable = False
        w.flags.writeable = False
        self.weights = c
        self.rates = w

    @classmethod
    def exponential(cls, gamma: float) -> "ExponentialBCF":
        """``(gamma/2) exp(-gamma |t|)``."""
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        return cls([gamma / 2.0], [gamma])

    def scaled(self, scale: float) -> "ExponentialBCF":
        return ExponentialBCF(scale**2 * self.weights, self.rates)

    def __repr__(self):
        return f"ExponentialBCF(n_terms={len(self.rates)})"


Bath = Union[DiscreteBath, ExponentialBCF]


def alpha_eval(bath: Bath, t):
    """Bath correlation function at ``t`` (scalar or array)."""
    t = np.asarray(t, dtype=float)
    c, w = bath.weights, bath.rates
    if isinstance(bath, DiscreteBath):
        out = np.exp(-1j * np.multiply.outer(t, bath.frequencies)) @ c.astype(complex)
    else:
        a = np.abs(t)
        fwd = np.exp(-np.multiply.outer(a, w)) @ c
        out = np.where(t >= 0, fwd, np.conj(fwd))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class FourierBathParams:
    """Truncated Fourier series of ``(gamma/2) exp(-gamma |t|)`` on ``[-T, T]``.

    ``nu`` is even; modes run over ``m = -nu/2 .. nu/2``.
    """

    gamma: float
    T: float
    nu: int

    def __post_init__(self):
        if not self.gamma > 0 or not self.T > 0:
            raise ValueError("gamma and T must be positive")
        if self.nu <= 0 or self.nu % 2:
            raise ValueError("nu must be a positive even integer")


def fourier_coefficient(p: FourierBathParams, m):
    """``C(m) = (1/2T) int_{-T}^{T} (gamma/2) exp(-gamma|t|) exp(i pi m t/T) dt``."""
    m = np.asarray(m)
    k = np.pi * m / p.T
    sign = np.where(m % 2 == 0, 1.0, -1.0)
    g = p.gamma
    return (g / (2 * p.T)) * g * (1 - sign * np.exp(-g * p.T)) / (g**2 + k**2)


def fourier_bath(p: FourierBathParams) -> DiscreteBath:
    """Discrete bath whose correlation function is the truncated series."""
    m = np.arange(-p.nu // 2, p.nu // 2 + 1)
    cm = fourier_coefficient(p, m)
    if np.any(cm < 0):
        raise ValueError("negative Fourier coefficient; couplings would be complex")
    return DiscreteBath(np.sqrt(cm), np.pi * m / p.T)


def _second_antiderivative(bath: Bath, x):
    """``K(x)`` with ``K'' = alpha``, ``K(0) = K'(0) = 0``; ``K(-x) = conj(K(x))``."""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)[..., None]
    k = (bath.weights * a**2 * _phi2(bath.rates * a)).sum(axis=-1)
    return np.where(x >= 0, k, np.conj(k))


def double_integral_I(bath: Bath, a, b, c, d):
    """``int_a^b dtau int_c^d ds alpha(tau - s)`` in closed form."""
    K = lambda x: _second_antiderivative(bath, x)
    out = K(np.subtract(b, c)) - K(np.subtract(b, d)) - K(np.subtract(a, c)) + K(np.subtract(a, d))
    return out[()] if np.ndim(out) == 0 else out


def kernel_integral(bath: Bath, omega: float, lo, hi, x, anchor):
    """``int_lo^hi dtau alpha(x - tau) exp(-i omega (tau - anchor))``.

    Arguments broadcast. Pieces with ``tau > x`` use the Hermitian extension.
    """
    lo, hi, x, anchor = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lo, hi, x, anchor)))
    c, w = bath.weights, bath.rates
    # tau in [lo, min(hi, x)]: alpha(x - tau) = sum c exp(-w (x - tau))
    top = np.minimum(hi, x)
    span = np.maximum(top - lo, 0.0)[..., None]
    k = w - 1j * omega
    fwd = (c * np.exp(-w * (x - top)[..., None] - 1j * omega * (top - anchor)[..., None])
           * span * _phi1(k * span)).sum(axis=-1)
    # tau in [max(lo, x), hi]: alpha(x - tau) = sum conj(c) exp(-conj(w) (tau - x))
    bot = np.maximum(lo, x)
    span2 = np.maximum(hi - bot, 0.0)[..., None]
    wc = np.conj(w)
    k2 = wc + 1j * omega
    bwd = (np.conj(c) * np.exp(-wc * (bot - x)[..., None] - 1j * omega * (bot - anchor)[..., None])
           * span2 * _phi1(k2 * span2)).sum(axis=-1)
    out = fwd + bwd
    return out[()] if out.ndim == 0 else out


def memory_coefficient(bath: Bath, omega: float, t_lo, s, anchor):
    """``int_{t_lo}^{s} dtau alpha(s - tau) exp(-i omega (tau - anchor))``."""
    return kernel_integral(bath, omega, t_lo, s, s, anchor)
