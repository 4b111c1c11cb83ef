"""Non-Markovian multiple-time correlation functions of a small quantum
system coupled to a bosonic bath.

Four routes are provided and meant to be cross-checked against each other:

* :mod:`mtcf.stochastic` -- Monte-Carlo average over coherent-state labels of
  reduced propagators,
* :mod:`mtcf.weak_ode` -- weak-coupling two-time ODE system (and its
  regression-theorem truncation),
* :mod:`mtcf.dephasing` -- closed forms for the pure-dephasing qubit,
* :mod:`mtcf.oracle` -- brute-force propagation on a truncated Fock space.
"""

__version__ = "0.1.0"

from mtcf.core import (
    SIGMA_12, SIGMA_X, SIGMA_Y, SIGMA_Z, IDENTITY, SystemSpec, OperatorBasis,
    EigenComponent, commutator, free_conjugate, eigen_decompose, qubit_basis,
    qubit_system,
)
from mtcf.bath import (
    DiscreteBath, ExponentialBCF, FourierBathParams, alpha_eval, fourier_bath,
    double_integral_I, memory_coefficient,
)

__all__ = [
    "SIGMA_12", "SIGMA_X", "SIGMA_Y", "SIGMA_Z", "IDENTITY", "SystemSpec",
    "OperatorBasis", "EigenComponent", "commutator", "free_conjugate",
    "eigen_decompose", "qubit_basis", "qubit_system", "DiscreteBath",
    "ExponentialBCF", "FourierBathParams", "alpha_eval", "fourier_bath",
    "double_integral_I", "memory_coefficient", "__version__",
]
