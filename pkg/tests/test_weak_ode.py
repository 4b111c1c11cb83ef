import numpy as np
import pytest

from mtcf.bath import DiscreteBath, ExponentialBCF
from mtcf.core import SIGMA_12, SIGMA_X, SIGMA_Y, SIGMA_Z, IDENTITY, dag, qubit_system
from mtcf.oracle import FockOracle, FockTruncation
from mtcf.weak_ode import (Mode, WeakCouplingModel, one_time_evolve, qrt_condition_check,
                           two_time_evolve)

PSI = np.array([1 + 2j, 1 + 1j]) / np.sqrt(7)
TWO_MODES = DiscreteBath.from_modes([(1.0, 6.0), (1.0, 2.0)])
SLOW_MODES = DiscreteBath.from_modes([(1.0, 0.5), (0.7, 1.5)])


def test_free_evolution_without_coupling():
    sys = qubit_system(1.3, "sigma_12", 0.0, PSI)
    times, v = one_time_evolve(sys, TWO_MODES, 2.0, 1e-2, n_out=5)
    model = WeakCouplingModel(sys, TWO_MODES)
    for t, row in zip(times, v):
        u = sys.free_propagator(t)
        rho = u @ np.outer(PSI, PSI.conj()) @ dag(u)
        expect = [np.trace(rho @ b) for b in model.basis.elements]
        assert np.allclose(row, expect, atol=1e-10)


def test_identity_component_conserved():
    sys = qubit_system(0.1, "sigma_12", 0.4, PSI)
    _, v = one_time_evolve(sys, ExponentialBCF.exponential(1.0), 5.0, 1e-2, n_out=6)
    assert np.allclose(v[:, 0], 1.0)


def test_dephasing_two_time_matches_oracle():
    # second order in the coupling is exact for pure dephasing
    sys = qubit_system(2.0, "sigma_z", 0.2, PSI)
    oracle = FockOracle(sys, TWO_MODES, FockTruncation(8))
    t = 0.5
    grid = np.linspace(0.5, 2.0, 16)
    ref = oracle.correlation([SIGMA_X, SIGMA_Y], [grid, t])
    full = two_time_evolve(sys, TWO_MODES, t, grid, 1e-3).correlation(SIGMA_X, SIGMA_Y)
    qrt = two_time_evolve(sys, TWO_MODES, t, grid, 1e-3, Mode.QRT_TRUNCATED).correlation(SIGMA_X, SIGMA_Y)
    assert np.max(np.abs(full - ref)) < 1e-9
    assert np.max(np.abs(qrt - ref)) > 1e-2


def test_weak_coupling_error_scales_with_fourth_power():
    errs = []
    for lam in (0.1, 0.2):
        sys = qubit_system(1.0, "sigma_12", lam, PSI)
        oracle = FockOracle(sys, SLOW_MODES, FockTruncation(6))
        grid = np.array([1.0, 2.0, 3.0])
        ref = oracle.correlation([SIGMA_X, SIGMA_X], [grid, 1.0])
        got = two_time_evolve(sys, SLOW_MODES, 1.0, grid, 1e-2).correlation(SIGMA_X, SIGMA_X)
        errs.append(np.max(np.abs(got - ref)))
    assert errs[0] < 1e-3
    assert 8 < errs[1] / errs[0] < 32


def test_equal_times_reduce_to_one_time_product():
    sys = qubit_system(0.7, "sigma_12", 0.3, PSI)
    bath = ExponentialBCF.exponential(1.0)
    model = WeakCouplingModel(sys, bath)
    v = model.one_time([1.2], 1e-3)[0]
    res = two_time_evolve(sys, bath, 1.2, np.array([1.2]), 1e-3)
    expect = model.basis.expand(SIGMA_X @ SIGMA_Y) @ v
    assert res.correlation(SIGMA_X, SIGMA_Y)[0] == pytest.approx(expect, abs=1e-12)


def test_scalar_end_time_samples_every_step():
    sys = qubit_system(0.7, "sigma_12", 0.3, PSI)
    res = two_time_evolve(sys, ExponentialBCF.exponential(1.0), 0.5, 1.0, 0.1)
    assert np.allclose(res.t_prime, np.linspace(0.5, 1.0, 6))
    with pytest.raises(ValueError):
        two_time_evolve(sys, ExponentialBCF.exponential(1.0), 0.5, 0.2, 0.1)


def test_qrt_condition_flags():
    dephasing = qubit_system(2.0, "sigma_z", 1.0, PSI)
    assert qrt_condition_check(dephasing, SIGMA_Z, SIGMA_X).qrt_predicted_valid
    assert qrt_condition_check(dephasing, SIGMA_X, SIGMA_Z).qrt_predicted_valid
    assert not qrt_condition_check(dephasing, SIGMA_X, SIGMA_Y).qrt_predicted_valid
    dissipative = qubit_system(0.1, "sigma_12", 0.4, PSI)
    report = qrt_condition_check(dissipative, SIGMA_12, SIGMA_X)
    assert report.a_commutator_zero is False and report.b_commutator_zero is False
    assert qrt_condition_check(dissipative, SIGMA_X, IDENTITY).b_commutator_zero
    assert qrt_condition_check(dissipative, dag(SIGMA_12), SIGMA_X).a_commutator_zero


@pytest.mark.parametrize("A,B", [(SIGMA_Z, SIGMA_X), (SIGMA_X, SIGMA_Z), (IDENTITY, SIGMA_Y)])
def test_full_equals_qrt_when_condition_holds_dephasing(A, B):
    sys = qubit_system(2.0, "sigma_z", 0.5, PSI)
    grid = np.linspace(0.7, 2.0, 8)
    full = two_time_evolve(sys, TWO_MODES, 0.7, grid, 1e-2).correlation(A, B)
    qrt = two_time_evolve(sys, TWO_MODES, 0.7, grid, 1e-2, Mode.QRT_TRUNCATED).correlation(A, B)
    assert np.max(np.abs(full - qrt)) < 1e-8
