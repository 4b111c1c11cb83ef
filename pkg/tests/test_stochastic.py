import numpy as np
import pytest

from mtcf.bath import DiscreteBath, FourierBathParams, alpha_eval, fourier_bath
from mtcf.core import SIGMA_X, SIGMA_Y, SIGMA_Z, qubit_system
from mtcf.dephasing import DephasingScenario, c_offdiag_sigmaz
from mtcf.oracle import FockOracle, FockTruncation, coherent_state
from mtcf.stochastic import (
    NonFiniteStateError, OStrategy, OverflowAbort, mc_correlation, noise_eval,
    o_components, propagate_segment, sample_labels, trajectory_rng,
)
from mtcf.weak_ode import two_time_evolve

PSI = np.array([1 + 2j, 1 + 1j]) / np.sqrt(7)
TWO_MODES = DiscreteBath.from_modes([(1.0, 6.0), (1.0, 2.0)])
ONE_MODE = DiscreteBath.from_modes([(0.8, 1.3)])


def bargmann(z, n):
    """Unnormalized coherent state ``exp(z a^dag)|0>``."""
    return coherent_state(z, n) * np.exp(abs(z) ** 2 / 2)


@pytest.mark.parametrize("zb,zk", [(0.0, 0.0), (0.3 - 0.2j, -0.1 + 0.4j), (1.1j, 0.7)])
def test_segment_is_projected_unitary_for_commuting_coupling(zb, zk):
    n = 40
    sys = qubit_system(1.0, "sigma_z", 1.0, [1, 1j])
    oracle = FockOracle(sys, ONE_MODE, FockTruncation(n))
    w = ONE_MODE.frequencies[0]
    t_lo, t_hi = 0.4, 1.1
    psi = np.array([0.6, 0.8j])
    ket = oracle.evolve(np.kron(psi, bargmann(zk * np.exp(-1j * w * t_lo), n)), t_hi - t_lo)
    bra = bargmann(zb * np.exp(-1j * w * t_hi), n)
    expect = np.kron(np.eye(2), bra.conj()[None, :]) @ ket
    got = propagate_segment(sys, ONE_MODE, OStrategy.COMMUTING, ([zb], [zk]), (t_lo, t_hi), psi, 1e-3)
    assert np.max(np.abs(got - expect)) < 1e-10


def test_segment_without_coupling_is_free_evolution():
    sys = qubit_system(1.7, "sigma_12", 0.0, PSI)
    zb, zk = np.array([0.3 + 0.1j, -0.2j]), np.array([0.5, 0.4 - 0.3j])
    got = propagate_segment(sys, TWO_MODES, OStrategy.ZEROTH_ORDER, (zb, zk), (0.2, 1.4), PSI, 1e-3)
    expect = np.exp(np.vdot(zb, zk)) * sys.free_propagator(1.2) @ PSI
    assert np.max(np.abs(got - expect)) < 1e-8


def test_segment_of_zero_length_is_bargmann_factor():
    sys = qubit_system(1.0, "sigma_12", 0.7, PSI)
    zb, zk = np.array([0.3 + 0.1j, -0.2j]), np.array([0.5, 0.4 - 0.3j])
    got = propagate_segment(sys, TWO_MODES, OStrategy.ZEROTH_ORDER, (zb, zk), (0.9, 0.9), PSI, 1e-2)
    assert np.array_equal(got, np.exp(np.sum(np.conj(zb) * zk)) * PSI)


def test_segment_rejects_reversed_interval_and_bad_dt():
    sys = qubit_system(1.0, "sigma_z")
    with pytest.raises(ValueError):
        propagate_segment(sys, ONE_MODE, OStrategy.COMMUTING, ([0], [0]), (1.0, 0.5), sys.psi0, 1e-2)
    with pytest.raises(ValueError):
        propagate_segment(sys, ONE_MODE, OStrategy.COMMUTING, ([0], [0]), (0.0, 0.5), sys.psi0, 0.0)


def test_segment_non_finite_raises():
    sys = qubit_system(1.0, "sigma_z")
    with pytest.raises(NonFiniteStateError):
        propagate_segment(sys, ONE_MODE, OStrategy.COMMUTING, ([30.0], [30.0]), (0.0, 0.5), sys.psi0, 1e-2)


def test_commuting_strategy_requires_commuting_coupling():
    with pytest.raises(ValueError):
        o_components(qubit_system(1.0, "sigma_12"), OStrategy.COMMUTING)
    assert len(o_components(qubit_system(1.0, "sigma_12"), OStrategy.ZEROTH_ORDER)) == 1


def test_labels_reproducible_per_index():
    a = sample_labels(trajectory_rng(5, 17), 3, 2).labels
    b = sample_labels(trajectory_rng(5, 17), 3, 2).labels
    c = sample_labels(trajectory_rng(5, 18), 3, 2).labels
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert np.all(a[0] == 0)


@pytest.mark.parametrize("bath", [TWO_MODES, fourier_bath(FourierBathParams(1.0, 40.0, 8))])
def test_noise_autocorrelation(bath):
    rng = np.random.default_rng(0)
    n = 100_000
    z = (rng.standard_normal((n, bath.n_modes)) + 1j * rng.standard_normal((n, bath.n_modes))) / np.sqrt(2)
    t, s = 0.8, 0.5
    prod = noise_eval(z.T, bath, t) * np.conj(noise_eval(z.T, bath, s))
    target = alpha_eval(bath, t - s)
    se_re = np.std(prod.real) / np.sqrt(n)
    se_im = np.std(prod.imag) / np.sqrt(n)
    assert abs(prod.mean().real - target.real) < 4 * se_re
    assert abs(prod.mean().imag - target.imag) < 4 * se_im


def test_sampled_labels_have_unit_variance():
    z = np.array([sample_labels(trajectory_rng(1, j), 2, 1).labels[1] for j in range(20000)])
    assert np.allclose(np.mean(np.abs(z) ** 2, axis=0), 1.0, atol=0.05)
    assert np.allclose(np.mean(z ** 2, axis=0), 0.0, atol=0.05)


def test_mc_dephasing_matches_closed_form():
    sys = qubit_system(2.0, "sigma_z", 1.0, PSI)
    grid = np.linspace(0.0, 1.5, 6)
    est = mc_correlation(sys, TWO_MODES, OStrategy.COMMUTING, [SIGMA_X, SIGMA_Z], [grid, 0.0],
                         n_traj=3000, seed=11, dt=5e-3, batch_size=1000)
    exact = c_offdiag_sigmaz(DephasingScenario(2.0, TWO_MODES, PSI[0], PSI[1]), grid)
    assert np.all(np.abs(est.mean.imag - exact.imag) < 4 * est.stderr_im + 1e-12)
    assert np.all(np.abs(est.mean.real - exact.real) < 4 * est.stderr_re + 1e-12)


def test_mc_three_time_commuting_matches_oracle():
    sys = qubit_system(2.0, "sigma_z", 0.6, PSI)
    oracle = FockOracle(sys, TWO_MODES, FockTruncation(10))
    grid = np.array([1.0, 1.4])
    times = [grid, 0.8, 0.3]
    ref = oracle.correlation([SIGMA_X, SIGMA_Y, SIGMA_X], times)
    est = mc_correlation(sys, TWO_MODES, OStrategy.COMMUTING, [SIGMA_X, SIGMA_Y, SIGMA_X], times,
                         n_traj=4000, seed=3, dt=5e-3, batch_size=2000)
    assert np.all(np.abs(est.mean - ref) < 4 * est.stderr + 1e-12)


def test_mc_zeroth_order_matches_weak_ode():
    sys = qubit_system(1.0, "sigma_12", 0.2, PSI)
    bath = DiscreteBath.from_modes([(1.0, 0.5), (0.7, 1.5)])
    grid = np.array([1.0, 2.0, 3.0])
    ode = two_time_evolve(sys, bath, 1.0, grid, 1e-2).correlation(SIGMA_X, SIGMA_X)
    est = mc_correlation(sys, bath, OStrategy.ZEROTH_ORDER, [SIGMA_X, SIGMA_X], [grid, 1.0],
                         n_traj=4000, seed=2, dt=1e-2, batch_size=2000)
    assert np.all(np.abs(est.mean - ode) < 4 * est.stderr + 5e-3)


def test_worker_count_does_not_change_bits():
    sys = qubit_system(2.0, "sigma_z", 1.0, PSI)
    args = (sys, TWO_MODES, OStrategy.COMMUTING, [SIGMA_X, SIGMA_Z], [np.array([0.2, 0.5]), 0.0])
    a = mc_correlation(*args, n_traj=600, seed=4, dt=1e-2, batch_size=128, workers=1)
    b = mc_correlation(*args, n_traj=600, seed=4, dt=1e-2, batch_size=128, workers=2)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.stderr_re, b.stderr_re)


def test_overflow_aborts():
    sys = qubit_system(2.0, "sigma_z", 1.0, PSI)
    with pytest.raises(OverflowAbort) as info:
        mc_correlation(sys, TWO_MODES, OStrategy.COMMUTING, [SIGMA_X, SIGMA_Z], [np.array([0.5]), 0.0],
                       n_traj=50, seed=1, dt=1e-2, z0=[1000.0, 1000.0])
    assert info.value.n_bad > 0


def test_mc_input_validation():
    sys = qubit_system(2.0, "sigma_z", 1.0, PSI)
    base = (sys, TWO_MODES, OStrategy.COMMUTING, [SIGMA_X, SIGMA_Z])
    with pytest.raises(ValueError):
        mc_correlation(*base, [np.array([0.5]), 1.0], n_traj=10, seed=1)
    with pytest.raises(ValueError):
        mc_correlation(*base, [np.array([0.5])], n_traj=10, seed=1)
    with pytest.raises(ValueError):
        mc_correlation(*base, [np.array([0.5]), 0.0], n_traj=0, seed=1)
    with pytest.raises(ValueError):
        mc_correlation(sys, TWO_MODES, OStrategy.COMMUTING, [SIGMA_X, SIGMA_Y, SIGMA_Z],
                       [np.array([1.0]), 0.2, 0.5], n_traj=10, seed=1)
