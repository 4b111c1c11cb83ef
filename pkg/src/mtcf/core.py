"""Finite-dimensional operator algebra for the system side of the model.

Operators are plain square ``complex128`` numpy arrays. Conventions for the
qubit: index 0 is the ``sigma_z = +1`` state, which carries energy ``+omega/2``
under ``H_S = (omega/2) sigma_z``; ``SIGMA_12`` lowers that state to index 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-12
BOHR_MERGE_TOL = 1e-9

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_12 = np.array([[0, 0], [1, 0]], dtype=complex)

NAMED_OPERATORS = {
    "identity": IDENTITY,
    "sigma_x": SIGMA_X,
    "sigma_y": SIGMA_Y,
    "sigma_z": SIGMA_Z,
    "sigma_12": SIGMA_12,
    "sigma_21": SIGMA_12.conj().T,
}


def as_operator(x, dim: int | None = None) -> np.ndarray:
    """Validate and convert ``x`` to a finite square complex matrix."""
    op = np.array(x, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1] or op.shape[0] == 0:
        raise ValueError(f"operator must be a non-empty square matrix, got shape {op.shape}")
    if dim is not None and op.shape[0] != dim:
        raise ValueError(f"operator dimension {op.shape[0]} does not match {dim}")
    if not np.all(np.isfinite(op)):
        raise ValueError("operator entries must be finite")
    return op


def dag(x: np.ndarray) -> np.ndarray:
    return x.conj().T


def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Return ``xy - yx``."""
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x @ y - y @ x


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """System Hamiltonian, coupling operator ``L``, coupling scale and state.

    ``coupling_scale`` multiplies every bath coupling ``g_n``, so the bath
    correlation function scales with its square.
    """

    h_sys: np.ndarray
    coupling: np.ndarray
    coupling_scale: float
    psi0: np.ndarray
    _energies: np.ndarray = field(init=False, repr=False)
    _eigvecs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = as_operator(self.h_sys)
        dim = h.shape[0]
        L = as_operator(self.coupling, dim)
        psi = np.array(self.psi0, dtype=complex).reshape(-1)
        if psi.shape != (dim,):
            raise ValueError(f"psi0 must have length {dim}")
        if np.max(np.abs(h - dag(h))) > HERMITIAN_TOL:
            raise ValueError("h_sys is not Hermitian")
        if abs(np.linalg.norm(psi) - 1.0) > NORM_TOL:
            raise ValueError("psi0 must have unit norm")
        if not self.coupling_scale >= 0:
            raise ValueError("coupling_scale must be >= 0")
        h = 0.5 * (h + dag(h))
        energies, vecs = np.linalg.eigh(h)
        for name, value in (("h_sys", h), ("coupling", L), ("psi0", psi),
                            ("coupling_scale", float(self.coupling_scale)),
                            ("_energies", energies), ("_eigvecs", vecs)):
            object.__setattr__(self, name, value)
        for arr in (h, L, psi, energies, vecs):
            arr.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.h_sys.shape[0]

    @property
    def energies(self) -> np.ndarray:
        return self._energies

    @property
    def eigvecs(self) -> np.ndarray:
        return self._eigvecs

    def free_propagator(self, s: float) -> np.ndarray:
        """``exp(-i H_S s)``."""
        v = self._eigvecs
        return (v * np.exp(-1j * self._energies * s)) @ dag(v)

    def with_coupling_scale(self, scale: float) -> "SystemSpec":
        return SystemSpec(self.h_sys, self.coupling, scale, self.psi0)


def qubit_system(omega: float, coupling="sigma_z", coupling_scale: float = 1.0,
                 psi0: Sequence[complex] = (1.0, 0.0), normalize: bool = True) -> SystemSpec:
    """Qubit with ``H_S = (omega/2) sigma_z``; ``coupling`` may be a name."""
    if isinstance(coupling, str):
        coupling = NAMED_OPERATORS[coupling]
    psi = np.asarray(psi0, dtype=complex)
    if normalize:
        psi = psi / np.linalg.norm(psi)
    return SystemSpec(0.5 * omega * SIGMA_Z, coupling, coupling_scale, psi)


def free_conjugate(sys: SystemSpec, x: np.ndarray, s: float) -> np.ndarray:
    """Return ``exp(i H_S s) x exp(-i H_S s)``."""
    u = sys.free_propagator(s)
    return dag(u) @ x @ u


class EigenComponent(NamedTuple):
    """Operator picking up ``exp(-i frequency s)`` under ``free_conjugate``."""

    frequency: float
    operator: np.ndarray


def eigen_decompose(sys: SystemSpec, x: np.ndarray) -> list[EigenComponent]:
    """Split ``x`` into eigenoperators of the free system Liouvillian.

    Bohr frequencies closer than ``BOHR_MERGE_TOL`` are merged. Components are
    returned with ascending frequency; zero blocks are omitted.
    """
    v = sys.eigvecs
    e = sys.energies
    xt = dag(v) @ x @ v
    scale = max(np.max(np.abs(xt)), 1.0)
    # Element (j, k) of the energy-basis matrix rotates as exp(-i (E_k - E_j) s).
    bohr = e[None, :] - e[:, None]
    mask = np.abs(xt) > 1e-15 * scale
    freqs = np.sort(bohr[mask])
    groups: list[list[float]] = []
    for f in freqs:
        if groups and f - groups[-1][-1] <= BOHR_MERGE_TOL:
            groups[-1].append(f)
        else:
            groups.append([f])
    out = []
    for grp in groups:
        lo, hi = grp[0], grp[-1]
        sel = mask & (bohr >= lo - 1e-15) & (bohr <= hi + 1e-15)
        block = np.where(sel, xt, 0.0)
        out.append(EigenComponent(float(np.mean(grp)), v @ block @ dag(v)))
    return out


class OperatorBasis:
    """Ordered basis of all ``dim x dim`` matrices under the trace product."""

    def __init__(self, elements: Sequence[np.ndarray]):
        mats = [as_operator(e) for e in elements]
        dim = mats[0].shape[0]
        if len(mats) != dim * dim or any(m.shape != (dim, dim) for m in mats):
            raise ValueError(f"a basis for dim={dim} needs {dim * dim} operators")
        self.dim = dim
        self.elements = np.array(mats)
        flat = self.elements.reshape(len(mats), -1)
        self._flat = flat
        self.gram = flat.conj() @ flat.T
        if np.linalg.cond(self.gram) > 1e12:
            raise ValueError("singular Gram matrix: elements do not span")
        self._gram_inv = np.linalg.inv(self.gram)

    def __len__(self):
        return len(self.elements)

    def expand(self, x: np.ndarray) -> np.ndarray:
        """Coefficients ``c`` with ``x = sum_mu c[mu] B_mu``."""
        return self._gram_inv @ (self._flat.conj() @ np.asarray(x, dtype=complex).reshape(-1))

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        return np.tensordot(coeffs, self.elements, axes=(0, 0))

    def expand_map(self, fn) -> np.ndarray:
        """Matrix ``M`` of a linear map with ``fn(B_mu) = sum_rho M[mu, rho] B_rho``."""
        return np.array([self.expand(fn(b)) for b in self.elements])

    def product_table(self) -> np.ndarray:
        """Tensor ``c`` with ``B_mu B_nu = sum_rho c[mu, nu, rho] B_rho``."""
        n = len(self)
        table = np.empty((n, n, n), dtype=complex)
        for mu, bm in enumerate(self.elements):
            for nu, bn in enumerate(self.elements):
                table[mu, nu] = self.expand(bm @ bn)
        return table


def qubit_basis() -> OperatorBasis:
    """Canonical qubit basis ``(I, sigma_x, sigma_y, sigma_z)``."""
    return OperatorBasis([IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z])


def basis_expand(basis: OperatorBasis, x: np.ndarray) -> np.ndarray:
    return basis.expand(x)


def basis_product_table(basis: OperatorBasis) -> np.ndarray:
    return basis.product_table()


def default_basis(dim: int) -> OperatorBasis:
    """Qubit Pauli basis for ``dim == 2``, matrix units otherwise."""
    if dim == 2:
        return qubit_basis()
    units = []
    for j in range(dim):
        for k in range(dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = 1.0
            units.append(m)
    return OperatorBasis(units)
