"""JSON scenario files: schema, parsing, serialization and the figure presets.

A scenario has the blocks ``system``, ``bath``, ``observables``, ``times``,
``method`` and an optional ``output``. Complex numbers are written either as
plain numbers, as ``[re, im]`` pairs or as Python-style strings (``"1+2j"``).
The README documents the full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from mtcf.bath import DiscreteBath, ExponentialBCF, FourierBathParams, fourier_bath
from mtcf.core import NAMED_OPERATORS, SystemSpec

REQUIRED = "REQUIRED-USER-INPUT"
METHODS = ("mc", "weak_ode", "exact_dephasing", "oracle")


class ConfigError(ValueError):
    """Invalid scenario; ``where`` names the offending block or field."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


def _complex(value, where) -> complex:
    if isinstance(value, bool):
        raise ConfigError(where, "expected a number")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            raise ConfigError(where, f"cannot parse complex number {value!r}") from None
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(where, f"expected a number or [re, im], got {value!r}")


def _dump_complex(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _float(value, where, positive=False, nonneg=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected a real number, got {value!r}")
    v = float(value)
    if not np.isfinite(v):
        raise ConfigError(where, "must be finite")
    if positive and v <= 0:
        raise ConfigError(where, "must be positive")
    if nonneg and v < 0:
        raise ConfigError(where, "must be non-negative")
    return v


def _int(value, where, positive=True) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise ConfigError(where, f"expected an integer, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(where, "must be positive")
    return int(value)


def _matrix(value, where, dim=None):
    if isinstance(value, str):
        if value not in NAMED_OPERATORS:
            raise ConfigError(where, f"unknown operator name {value!r}; "
                                     f"known: {', '.join(sorted(NAMED_OPERATORS))}")
        return value
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ConfigError(where, "expected an operator name or a square matrix of entries")
    rows = [[_complex(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(value)]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ConfigError(where, "matrix must be square")
    if dim is not None and n != dim:
        raise ConfigError(where, f"matrix must be {dim}x{dim}")
    return tuple(tuple(r) for r in rows)


def _resolve_matrix(m) -> np.ndarray:
    if isinstance(m, str):
        return NAMED_OPERATORS[m]
    return np.array(m, dtype=complex)


def _dump_matrix(m):
    if isinstance(m, str):
        return m
    return [[_dump_complex(x) for x in row] for row in m]


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ConfigError(where, "expected an object")
    if key not in d:
        raise ConfigError(f"{where}.{key}" if where else key, "missing required field")
    return d[key]


def _no_extra(d: dict, allowed, where):
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(where, f"unknown field(s): {', '.join(sorted(extra))}")


@dataclass
class SystemBlock:
    coupling: Any = "sigma_z"
    coupling_scale: float = 1.0
    psi0: tuple = (1.0, 0.0)
    omega: float | None = None
    h_sys: Any = None

    @property
    def dim(self) -> int:
        return 2 if self.h_sys is None else len(self.h_sys)

    def build(self) -> SystemSpec:
        if self.h_sys is None:
            if self.omega is None:
                raise ConfigError("system.omega", f"is {REQUIRED}: supply the qubit frequency")
            h = 0.5 * self.omega * NAMED_OPERATORS["sigma_z"]
        else:
            h = _resolve_matrix(self.h_sys)
        psi = np.array(self.psi0, dtype=complex)
        if psi.shape != (h.shape[0],):
            raise ConfigError("system.psi0", f"must have {h.shape[0]} components")
        nrm = np.linalg.norm(psi)
        if nrm == 0:
            raise ConfigError("system.psi0", "must be non-zero")
        L = _resolve_matrix(self.coupling)
        if L.shape != h.shape:
            raise ConfigError("system.coupling", "dimension does not match the Hamiltonian")
        try:
            return SystemSpec(h, L, self.coupling_scale, psi / nrm)
        except ValueError as exc:
            raise ConfigError("system", str(exc)) from None

    @classmethod
    def parse(cls, d) -> "SystemBlock":
        w = "system"
        if not isinstance(d, dict):
            raise ConfigError(w, "expected an object")
        _no_extra(d, ("dim", "omega", "h_sys", "coupling", "coupling_scale", "psi0"), w)
        omega = d.get("omega")
        if omega == REQUIRED:
            omega = None
        elif omega is not None:
            omega = _float(omega, f"{w}.omega")
        h_sys = _matrix(d["h_sys"], f"{w}.h_sys") if "h_sys" in d else None
        if omega is None and h_sys is None and d.get("omega") != REQUIRED:
            raise ConfigError(f"{w}.omega", "either omega (qubit shorthand) or h_sys is required")
        dim = len(h_sys) if h_sys is not None else 2
        if "dim" in d and _int(d["dim"], f"{w}.dim") != dim:
            raise ConfigError(f"{w}.dim", f"does not match the Hamiltonian dimension {dim}")
        coupling = _matrix(_require(d, "coupling", w), f"{w}.coupling", None)
        psi_raw = _require(d, "psi0", w)
        if not isinstance(psi_raw, list):
            raise ConfigError(f"{w}.psi0", "expected a list of amplitudes")
        psi0 = tuple(_complex(x, f"{w}.psi0[{i}]") for i, x in enumerate(psi_raw))
        if len(psi0) != dim:
            raise ConfigError(f"{w}.psi0", f"must have {dim} components")
        scale = _float(d.get("coupling_scale", 1.0), f"{w}.coupling_scale", nonneg=True)
        return cls(coupling, scale, psi0, omega, h_sys)

    def dump(self) -> dict:
        out = {"dim": self.dim}
        if self.h_sys is None:
            out["omega"] = REQUIRED if self.omega is None else self.omega
        else:
            out["h_sys"] = _dump_matrix(self.h_sys)
            if self.omega is not None:
                out["omega"] = self.omega
        out["coupling"] = _dump_matrix(self.coupling)
        out["coupling_scale"] = self.coupling_scale
        out["psi0"] = [_dump_complex(z) for z in self.psi0]
        return out


@dataclass
class BathBlock:
    kind: str
    modes: tuple = ()
    gamma: float | None = None
    T: float | None = None
    nu: int | None = None
    z0: tuple | None = None

    def build(self):
        if self.kind == "modes":
            return DiscreteBath.from_modes(self.modes)
        if self.kind == "exponential":
            return ExponentialBCF.exponential(self.gamma)
        return fourier_bath(FourierBathParams(self.gamma, self.T, self.nu))

    @classmethod
    def parse(cls, d) -> "BathBlock":
        w = "bath"
        if not isinstance(d, dict):
            raise ConfigError(w, "expected an object")
        kinds = [k for k in ("modes", "exponential", "fourier") if k in d]
        if len(kinds) != 1:
            raise ConfigError(w, "exactly one of modes, exponential, fourier is required")
        _no_extra(d, kinds + ["z0"], w)
        kind = kinds[0]
        body = d[kind]
        z0 = None
        if "z0" in d:
            if not isinstance(d["z0"], list):
                raise ConfigError(f"{w}.z0", "expected a list of complex labels")
            z0 = tuple(_complex(x, f"{w}.z0[{i}]") for i, x in enumerate(d["z0"]))
        if kind == "modes":
            if not isinstance(body, list):
                raise ConfigError(f"{w}.modes", "expected a list of {g, omega} objects")
            modes = []
            for i, m in enumerate(body):
                where = f"{w}.modes[{i}]"
                if not isinstance(m, dict):
                    raise ConfigError(where, "expected an object with g and omega")
                _no_extra(m, ("g", "omega"), where)
                modes.append((_complex(_require(m, "g", where), f"{where}.g"),
                              _float(_require(m, "omega", where), f"{where}.omega")))
            if z0 is not None and len(z0) != len(modes):
                raise ConfigError(f"{w}.z0", "needs one label per mode")
            return cls("modes", tuple(modes), z0=z0)
        if kind == "exponential":
            if not isinstance(body, dict):
                raise ConfigError(f"{w}.exponential", "expected an object")
            _no_extra(body, ("gamma",), f"{w}.exponential")
            if z0 is not None:
                raise ConfigError(f"{w}.z0", "requires explicit modes")
            return cls("exponential", gamma=_float(_require(body, "gamma", f"{w}.exponential"),
                                                   f"{w}.exponential.gamma", positive=True))
        where = f"{w}.fourier"
        if not isinstance(body, dict):
            raise ConfigError(where, "expected an object")
        _no_extra(body, ("gamma", "T", "nu"), where)
        nu = _int(_require(body, "nu", where), f"{where}.nu")
        if nu % 2:
            raise ConfigError(f"{where}.nu", "must be even")
        if z0 is not None and len(z0) != nu + 1:
            raise ConfigError(f"{w}.z0", "needs one label per mode")
        return cls("fourier", gamma=_float(_require(body, "gamma", where), f"{where}.gamma", positive=True),
                   T=_float(_require(body, "T", where), f"{where}.T", positive=True), nu=nu, z0=z0)

    def dump(self) -> dict:
        if self.kind == "modes":
            out = {"modes": [{"g": _dump_complex(g), "omega": w} for g, w in self.modes]}
        elif self.kind == "exponential":
            out = {"exponential": {"gamma": self.gamma}}
        else:
            out = {"fourier": {"gamma": self.gamma, "T": self.T, "nu": self.nu}}
        if self.z0 is not None:
            out["z0"] = [_dump_complex(z) for z in self.z0]
        return out


@dataclass
class TimesBlock:
    """Fixed earlier times ``t_2 > ... > t_N`` and the grid of ``t_1 = t'`` values."""

    fixed: tuple = ()
    t_prime: tuple | None = None
    start: float | None = None
    end: float | None = None
    step: float | None = None

    def grid(self) -> np.ndarray:
        if self.t_prime is not None:
            return np.array(self.t_prime, dtype=float)
        n = int(round((self.end - self.start) / self.step))
        return self.start + self.step * np.arange(n + 1)

    @property
    def t(self) -> float:
        return self.fixed[0] if self.fixed else 0.0

    @classmethod
    def parse(cls, d, n_obs: int) -> "TimesBlock":
        w = "times"
        if not isinstance(d, dict):
            raise ConfigError(w, "expected an object")
        _no_extra(d, ("t", "t_prime", "t_prime_start", "t_prime_end", "step"), w)
        t = d.get("t", [])
        t_list = t if isinstance(t, list) else [t]
        fixed = tuple(_float(x, f"{w}.t", nonneg=True) for x in t_list)
        if len(fixed) != n_obs - 1:
            raise ConfigError(f"{w}.t", f"{n_obs} observables need {n_obs - 1} fixed earlier time(s)")
        if any(b >= a for a, b in zip(fixed, fixed[1:])):
            raise ConfigError(f"{w}.t", "fixed times must be strictly decreasing")
        lower = fixed[0] if fixed else 0.0
        if "t_prime" in d:
            if any(k in d for k in ("t_prime_start", "t_prime_end", "step")):
                raise ConfigError(w, "give either t_prime or a t_prime_start/t_prime_end/step grid")
            raw = d["t_prime"]
            if not isinstance(raw, list) or not raw:
                raise ConfigError(f"{w}.t_prime", "expected a non-empty list")
            tp = tuple(_float(x, f"{w}.t_prime[{i}]") for i, x in enumerate(raw))
            out = cls(fixed, t_prime=tp)
        else:
            start = _float(_require(d, "t_prime_start", w), f"{w}.t_prime_start")
            end = _float(_require(d, "t_prime_end", w), f"{w}.t_prime_end")
            step = _float(_require(d, "step", w), f"{w}.step", positive=True)
            if end < start:
                raise ConfigError(f"{w}.t_prime_end", "must be >= t_prime_start")
            n = (end - start) / step
            if abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ConfigError(f"{w}.step", "must divide t_prime_end - t_prime_start")
            out = cls(fixed, start=start, end=end, step=step)
        g = out.grid()
        if np.any(np.diff(g) <= 0):
            raise ConfigError(f"{w}.t_prime", "must be strictly increasing")
        if g[0] < lower - 1e-12:
            raise ConfigError(f"{w}.t_prime", f"must not start before t = {lower}")
        return out

    def dump(self) -> dict:
        out = {}
        if len(self.fixed) == 1:
            out["t"] = self.fixed[0]
        elif self.fixed:
            out["t"] = list(self.fixed)
        if self.t_prime is not None:
            out["t_prime"] = list(self.t_prime)
        else:
            out.update(t_prime_start=self.start, t_prime_end=self.end, step=self.step)
        return out


_METHOD_FIELDS = {
    "mc": ("n_traj", "seed", "dt", "o_strategy", "batch_size"),
    "weak_ode": ("dt", "mode"),
    "exact_dephasing": ("tau",),
    "oracle": ("n_max",),
}


@dataclass
class MethodBlock:
    name: str
    params: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, d) -> "MethodBlock":
        w = "method"
        if not isinstance(d, dict):
            raise ConfigError(w, "expected an object")
        names = [k for k in d if k in METHODS]
        if len(names) != 1 or len(d) != 1:
            raise ConfigError(w, f"exactly one method required, one of: {', '.join(METHODS)}")
        name = names[0]
        body = d[name]
        where = f"{w}.{name}"
        if not isinstance(body, dict):
            raise ConfigError(where, "expected an object")
        _no_extra(body, _METHOD_FIELDS[name], where)
        p = {}
        if name == "mc":
            p["n_traj"] = _int(_require(body, "n_traj", where), f"{where}.n_traj")
            p["seed"] = _int(_require(body, "seed", where), f"{where}.seed", positive=False)
            if p["seed"] < 0:
                raise ConfigError(f"{where}.seed", "must be non-negative")
            if "dt" in body:
                p["dt"] = _float(body["dt"], f"{where}.dt", positive=True)
            strat = body.get("o_strategy", "zeroth_order")
            if strat not in ("commuting", "zeroth_order"):
                raise ConfigError(f"{where}.o_strategy", "must be 'commuting' or 'zeroth_order'")
            p["o_strategy"] = strat
            if "batch_size" in body:
                p["batch_size"] = _int(body["batch_size"], f"{where}.batch_size")
        elif name == "weak_ode":
            p["dt"] = _float(_require(body, "dt", where), f"{where}.dt", positive=True)
            mode = body.get("mode", "full")
            if mode not in ("full", "qrt_truncated"):
                raise ConfigError(f"{where}.mode", "must be 'full' or 'qrt_truncated'")
            p["mode"] = mode
        elif name == "exact_dephasing":
            if "tau" in body:
                p["tau"] = _float(body["tau"], f"{where}.tau")
        else:
            p["n_max"] = _int(body.get("n_max", 30), f"{where}.n_max")
        return cls(name, p)

    def dump(self) -> dict:
        return {self.name: dict(self.params)}


@dataclass
class ScenarioConfig:
    system: SystemBlock
    bath: BathBlock
    observables: tuple
    times: TimesBlock
    method: MethodBlock
    output: str | None = None

    def observable_matrices(self) -> list:
        return [_resolve_matrix(o) for o in self.observables]

    def to_dict(self) -> dict:
        out = {
            "system": self.system.dump(),
            "bath": self.bath.dump(),
            "observables": [_dump_matrix(o) for o in self.observables],
            "times": self.times.dump(),
            "method": self.method.dump(),
        }
        if self.output is not None:
            out["output"] = self.output
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def parse_config(d: dict) -> ScenarioConfig:
    if not isinstance(d, dict):
        raise ConfigError("config", "top level must be an object")
    _no_extra(d, ("system", "bath", "observables", "times", "method", "output"), "config")
    for block in ("system", "bath", "observables", "times", "method"):
        if block not in d:
            raise ConfigError(block, "missing required block")
    system = SystemBlock.parse(d["system"])
    bath = BathBlock.parse(d["bath"])
    raw_obs = d["observables"]
    if not isinstance(raw_obs, list) or not raw_obs:
        raise ConfigError("observables", "expected a non-empty list")
    obs = tuple(_matrix(o, f"observables[{i}]", system.dim) for i, o in enumerate(raw_obs))
    for i, o in enumerate(obs):
        if isinstance(o, str) and system.dim != 2:
            raise ConfigError(f"observables[{i}]", "named operators are qubit operators")
    times = TimesBlock.parse(d["times"], len(obs))
    method = MethodBlock.parse(d["method"])
    output = d.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output", "expected a path string")
    return ScenarioConfig(system, bath, obs, times, method, output)


def loads(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return parse_config(data)


def load(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(str(path), exc.strerror or str(exc)) from None
    return loads(text)


# -- presets -----------------------------------------------------------------

_FIG1_PSI = ((1.0 + 2.0j), (1.0 + 1.0j))
_FIG1_BATH = BathBlock("modes", ((1.0 + 0j, 6.0), (1.0 + 0j, 2.0)))


def _fig1a():
    base = ScenarioConfig(
        SystemBlock("sigma_z", 1.0, _FIG1_PSI, None),
        _FIG1_BATH, ("sigma_x", "sigma_z"),
        TimesBlock((0.0,), start=0.0, end=3.0, step=0.06),
        MethodBlock("mc", {"n_traj": 100000, "seed": 1, "dt": 1e-3, "o_strategy": "commuting"}),
        "fig1a.csv")
    exact = _variant(base, MethodBlock("exact_dephasing", {}), "fig1a_exact.csv")
    return [("", base), ("_exact", exact)]


def _fig1b():
    base = ScenarioConfig(
        SystemBlock("sigma_z", 1.0, _FIG1_PSI, None),
        _FIG1_BATH, ("sigma_x", "sigma_y"),
        TimesBlock((0.5,), start=0.5, end=3.0, step=0.05),
        MethodBlock("mc", {"n_traj": 10000, "seed": 1, "dt": 1e-3, "o_strategy": "commuting"}),
        "fig1b.csv")
    return [("", base),
            ("_exact", _variant(base, MethodBlock("oracle", {"n_max": 30}), "fig1b_exact.csv")),
            ("_qrt", _variant(base, MethodBlock("weak_ode", {"dt": 1e-3, "mode": "qrt_truncated"}),
                              "fig1b_qrt.csv"))]


def _fig2():
    base = ScenarioConfig(
        SystemBlock("sigma_12", 0.2, _FIG1_PSI, 0.1),
        BathBlock("fourier", gamma=1.0, T=40.0, nu=8), ("sigma_x", "sigma_x"),
        TimesBlock((1.0,), start=1.0, end=16.0, step=0.25),
        MethodBlock("mc", {"n_traj": 1000000, "seed": 1, "dt": 0.02, "o_strategy": "zeroth_order"}),
        "fig2.csv")
    return [("", base),
            ("_ode", _variant(base, MethodBlock("weak_ode", {"dt": 1e-3, "mode": "full"}), "fig2_ode.csv"))]


def _fig3():
    base = ScenarioConfig(
        SystemBlock("sigma_12", 0.4, _FIG1_PSI, 0.1),
        BathBlock("exponential", gamma=1.0), ("sigma_x", "sigma_x"),
        TimesBlock((10.0,), start=10.0, end=30.0, step=0.1),
        MethodBlock("weak_ode", {"dt": 1e-3, "mode": "full"}),
        "fig3.csv")
    return [("", base),
            ("_qrt", _variant(base, MethodBlock("weak_ode", {"dt": 1e-3, "mode": "qrt_truncated"}),
                              "fig3_qrt.csv"))]


def _variant(cfg: ScenarioConfig, method: MethodBlock, output: str) -> ScenarioConfig:
    return ScenarioConfig(cfg.system, cfg.bath, cfg.observables, cfg.times, method, output)


PRESETS = {"fig1a": _fig1a, "fig1b": _fig1b, "fig2": _fig2, "fig3": _fig3}


def preset(name: str) -> list[tuple[str, ScenarioConfig]]:
    """``(suffix, config)`` pairs; the first has an empty suffix, the rest are
    companion runs for the same scenario with a different method."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return PRESETS[name]()
