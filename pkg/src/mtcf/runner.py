"""Dispatch a :class:`~mtcf.config.ScenarioConfig` to one of the solvers."""

from __future__ import annotations

import numpy as np

from mtcf import __version__
from mtcf.bath import DiscreteBath
from mtcf.config import ConfigError, ScenarioConfig
from mtcf.core import SIGMA_Z, SystemSpec
from mtcf.dephasing import (DephasingScenario, c_offdiag_offdiag, c_offdiag_sigmaz,
                            c_sigmaz_sigmaz)
from mtcf.oracle import FockOracle, FockTruncation
from mtcf.stochastic import OStrategy, default_dt, mc_correlation
from mtcf.trace import CorrelationTrace
from mtcf.weak_ode import Mode, two_time_evolve, WeakCouplingModel


def _meta(cfg: ScenarioConfig, **extra) -> dict:
    out = {"mtcf_version": __version__, "method": cfg.method.name}
    out.update(extra)
    return out


def _discrete(cfg: ScenarioConfig, bath, what: str) -> DiscreteBath:
    if not isinstance(bath, DiscreteBath):
        raise ConfigError("bath", f"{what} needs a bath of discrete modes (modes or fourier)")
    return bath


def _times(cfg: ScenarioConfig, grid):
    return [grid] + list(cfg.times.fixed)


def run_mc(cfg, sys, bath, grid, workers, seed_override=None) -> CorrelationTrace:
    p = cfg.method.params
    bath = _discrete(cfg, bath, "the Monte-Carlo method")
    strategy = OStrategy(p["o_strategy"])
    seed = p["seed"] if seed_override is None else seed_override
    dt = p.get("dt", default_dt(bath.scaled(sys.coupling_scale)))
    try:
        est = mc_correlation(sys, bath, strategy, cfg.observable_matrices(), _times(cfg, grid),
                             p["n_traj"], seed, dt=dt, z0=cfg.bath.z0,
                             batch_size=p.get("batch_size", 4096), workers=workers)
    except ValueError as exc:
        if "COMMUTING" in str(exc):
            raise ConfigError("method.mc.o_strategy", str(exc)) from None
        raise
    meta = _meta(cfg, seed=seed, n_traj=p["n_traj"], dt="%.17g" % dt, o_strategy=strategy.value,
                 n_overflow=est.n_overflow)
    return CorrelationTrace(cfg.times.t, grid, est.mean, est.stderr_re, est.stderr_im, meta)


def run_weak_ode(cfg, sys, bath, grid) -> CorrelationTrace:
    p = cfg.method.params
    obs = cfg.observable_matrices()
    if cfg.bath.z0 is not None and np.any(np.asarray(cfg.bath.z0) != 0):
        raise ConfigError("bath.z0", "the weak-coupling equations assume a vacuum bath")
    if len(obs) == 1:
        model = WeakCouplingModel(sys, bath)
        v = model.one_time(grid, p["dt"])
        vals = v @ model.basis.expand(obs[0])
    elif len(obs) == 2:
        res = two_time_evolve(sys, bath, cfg.times.t, grid, p["dt"], Mode(p["mode"]))
        vals = res.correlation(obs[0], obs[1])
    else:
        raise ConfigError("observables", "the weak-coupling method handles one or two observables")
    return CorrelationTrace(cfg.times.t, grid, vals, 0.0, 0.0,
                            _meta(cfg, dt="%.17g" % p["dt"], mode=p["mode"]))


def _offdiag_params(a: np.ndarray):
    if abs(a[0, 0]) > 1e-14 or abs(a[1, 1]) > 1e-14:
        return None
    return a[0, 1], a[1, 0]


def run_exact_dephasing(cfg, sys: SystemSpec, bath, grid) -> CorrelationTrace:
    if sys.dim != 2 or np.linalg.norm(sys.coupling - SIGMA_Z) > 1e-12:
        raise ConfigError("system.coupling", "the closed forms need coupling sigma_z")
    h = sys.h_sys
    if abs(h[0, 1]) > 1e-14 or abs(h[1, 0]) > 1e-14 or abs(h[0, 0] + h[1, 1]) > 1e-12:
        raise ConfigError("system", "the closed forms need H_S = (omega/2) sigma_z")
    omega = float((h[0, 0] - h[1, 1]).real)
    obs = cfg.observable_matrices()
    if len(obs) != 2:
        raise ConfigError("observables", "the closed forms are two-time correlations")
    if cfg.bath.z0 is not None and np.any(np.asarray(cfg.bath.z0) != 0):
        raise ConfigError("bath.z0", "the closed forms assume a vacuum bath")
    A, B = obs
    pa, pb = _offdiag_params(A), _offdiag_params(B)
    is_z = lambda m: np.linalg.norm(m - SIGMA_Z) < 1e-14
    psi = sys.psi0
    t = cfg.times.t
    if pa is not None and pb is not None:
        sc = DephasingScenario(omega, bath, psi[0], psi[1], pa[0], pa[1], pb[0], pb[1],
                               sys.coupling_scale)
        tau = cfg.method.params.get("tau")
        vals = np.array([c_offdiag_offdiag(sc, tp, t) for tp in grid]) if tau is None else \
            np.array([c_offdiag_offdiag(sc, tp, t, tau=tau) for tp in grid])
    elif pa is not None and is_z(B):
        sc = DephasingScenario(omega, bath, psi[0], psi[1], pa[0], pa[1],
                               coupling_scale=sys.coupling_scale)
        vals = c_offdiag_sigmaz(sc, grid, t)
    elif is_z(A) and is_z(B):
        vals = c_sigmaz_sigmaz(None, grid, t)
    else:
        raise ConfigError("observables", "closed forms exist for off-diagonal or sigma_z observables")
    return CorrelationTrace(t, grid, vals, 0.0, 0.0, _meta(cfg))


def run_oracle(cfg, sys, bath, grid) -> CorrelationTrace:
    bath = _discrete(cfg, bath, "the Fock-space oracle")
    n_max = cfg.method.params["n_max"]
    try:
        oracle = FockOracle(sys, bath, FockTruncation(n_max), cfg.bath.z0)
    except ValueError as exc:
        raise ConfigError("method.oracle", str(exc)) from None
    vals = oracle.correlation(cfg.observable_matrices(), _times(cfg, grid))
    return CorrelationTrace(cfg.times.t, grid, vals, 0.0, 0.0,
                            _meta(cfg, n_max=n_max, max_leakage="%.3g" % oracle.max_leakage))


def run_config(cfg: ScenarioConfig, workers: int = 1, seed_override: int | None = None) -> CorrelationTrace:
    """Evaluate a scenario; raises :class:`ConfigError` for unsupported combinations."""
    sys = cfg.system.build()
    bath = cfg.bath.build()
    grid = cfg.times.grid()
    name = cfg.method.name
    if name == "mc":
        return run_mc(cfg, sys, bath, grid, workers, seed_override)
    if name == "weak_ode":
        return run_weak_ode(cfg, sys, bath, grid)
    if name == "exact_dephasing":
        return run_exact_dephasing(cfg, sys, bath, grid)
    return run_oracle(cfg, sys, bath, grid)
