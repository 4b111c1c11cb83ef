import json
import subprocess
import sys

import numpy as np
import pytest

from mtcf.cli import main
from mtcf.config import PRESETS, REQUIRED, ConfigError, loads, parse_config, preset
from mtcf.trace import CorrelationTrace, read_csv, write_csv


def dephasing_config(method=None, **times):
    return {
        "system": {"omega": 2.0, "coupling": "sigma_z", "psi0": [[1, 2], [1, 1]]},
        "bath": {"modes": [{"g": 1, "omega": 6}, {"g": 1, "omega": 2}]},
        "observables": ["sigma_x", "sigma_z"],
        "times": times or {"t": 0.0, "t_prime_start": 0.0, "t_prime_end": 1.0, "step": 0.25},
        "method": method or {"exact_dephasing": {}},
    }


def write(tmp_path, cfg, name="scenario.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_round_trip(name):
    for _, cfg in preset(name):
        assert loads(cfg.to_json()) == cfg


def test_fig1_presets_require_omega(tmp_path, capsys):
    assert main(["preset", "fig1a", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "fig1a.json").read_text()
    assert REQUIRED in text
    assert main(["run", str(tmp_path / "fig1a.json")]) == 2
    assert "system.omega" in capsys.readouterr().err


def test_preset_writes_companions(tmp_path):
    main(["preset", "fig3", "--out", str(tmp_path)])
    assert {p.name for p in tmp_path.iterdir()} == {"fig3.json", "fig3_qrt.json"}


@pytest.mark.parametrize("mutate,where", [
    (lambda c: c.pop("method"), "method"),
    (lambda c: c["system"].update(coupling="sigma_w"), "system.coupling"),
    (lambda c: c["bath"]["modes"][1].pop("omega"), "bath.modes[1].omega"),
    (lambda c: c["times"].update(step=0.3), "times.step"),
    (lambda c: c.update(method={"mc": {"n_traj": 10}}), "method.mc.seed"),
    (lambda c: c["system"].update(psi0=[1]), "system.psi0"),
    (lambda c: c.update(observables=["sigma_x"]), "times.t"),
    (lambda c: c.update(bath={"fourier": {"gamma": 1, "T": 40, "nu": 7}}), "bath.fourier.nu"),
])
def test_config_errors_name_the_field(mutate, where):
    cfg = dephasing_config()
    mutate(cfg)
    with pytest.raises(ConfigError) as info:
        parse_config(cfg)
    assert info.value.where == where


def test_json_syntax_error_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "system": {\n    "omega": 2.0,,\n  }\n}')
    assert main(["run", str(p)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_unsupported_method_combination_exits_2(tmp_path):
    cfg = dephasing_config({"mc": {"n_traj": 10, "seed": 1}})
    cfg["bath"] = {"exponential": {"gamma": 1.0}}
    assert main(["run", write(tmp_path, cfg), "-o", str(tmp_path / "o.csv")]) == 2


def test_run_writes_csv_with_metadata(tmp_path):
    out = tmp_path / "exact.csv"
    assert main(["run", write(tmp_path, dephasing_config()), "-o", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("# mtcf_version=")
    assert "t,t_prime,re,im,stderr_re,stderr_im" in text
    trace = read_csv(out)
    assert np.allclose(trace.t_prime, [0, 0.25, 0.5, 0.75, 1.0])
    assert trace.values[0] == pytest.approx(2j / 7)
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".mtcf-")] == []


def test_output_relative_to_config(tmp_path):
    cfg = dephasing_config()
    cfg["output"] = "result.csv"
    assert main(["run", write(tmp_path, cfg)]) == 0
    assert (tmp_path / "result.csv").exists()


def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(1)
    vals = rng.normal(size=7) + 1j * rng.normal(size=7)
    tr = CorrelationTrace(0.5, np.linspace(0.5, 2, 7), vals, rng.random(7), rng.random(7), {"k": "v"})
    write_csv(tr, tmp_path / "x.csv")
    back = read_csv(tmp_path / "x.csv")
    assert np.array_equal(back.values, tr.values) and np.array_equal(back.stderr_im, tr.stderr_im)
    assert back.metadata == {"k": "v"}


def test_compare_exit_codes(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    c = tmp_path / "c.csv"
    grid = np.linspace(0, 1, 5)
    write_csv(CorrelationTrace(0.0, grid, np.ones(5), 0.0, 0.0), a)
    write_csv(CorrelationTrace(0.0, grid, np.ones(5) + 0.5, 0.1, 0.1), b)
    write_csv(CorrelationTrace(0.0, grid[:4], np.ones(4), 0.0, 0.0), c)
    assert main(["compare", str(a), str(a)]) == 0
    assert main(["compare", str(a), str(b), "--report", str(tmp_path / "r.csv")]) == 1
    assert "max_abs_diff=0.5" in capsys.readouterr().out
    assert read_csv(tmp_path / "r.csv").values[0] == pytest.approx(-0.5)
    assert main(["compare", str(a), str(b), "--nsigma", "4"]) == 0
    assert main(["compare", str(a), str(c)]) == 2
    assert main(["compare", str(a), str(tmp_path / "missing.csv")]) == 2


def mc_config(seed=5, n=300, **extra):
    body = {"n_traj": n, "seed": seed, "dt": 0.01, "o_strategy": "commuting", "batch_size": 64}
    body.update(extra)
    return dephasing_config({"mc": body}, t=0.0, t_prime=[0.1, 0.3, 0.6])


def test_seed_environment_override(tmp_path, monkeypatch):
    path = write(tmp_path, mc_config(seed=5))
    main(["run", path, "-o", str(tmp_path / "a.csv"), "--threads", "1"])
    monkeypatch.setenv("MTCF_SEED", "6")
    main(["run", path, "-o", str(tmp_path / "b.csv"), "--threads", "1"])
    monkeypatch.setenv("MTCF_SEED", "oops")
    assert main(["run", path, "-o", str(tmp_path / "c.csv")]) == 2
    a, b = read_csv(tmp_path / "a.csv"), read_csv(tmp_path / "b.csv")
    assert a.metadata["seed"] == "5" and b.metadata["seed"] == "6"
    assert not np.array_equal(a.values, b.values)


def test_threads_do_not_change_output(tmp_path):
    path = write(tmp_path, mc_config())
    main(["run", path, "-o", str(tmp_path / "a.csv"), "--threads", "1"])
    main(["run", path, "-o", str(tmp_path / "b.csv"), "--threads", "2"])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_overflow_exit_code(tmp_path):
    cfg = mc_config(n=20)
    cfg["bath"]["z0"] = [1000, 1000]
    assert main(["run", write(tmp_path, cfg), "-o", str(tmp_path / "o.csv")]) == 3
    assert not (tmp_path / "o.csv").exists()


def test_oracle_and_weak_ode_methods(tmp_path):
    cfg = dephasing_config({"oracle": {"n_max": 12}}, t=0.0, t_prime=[0.0, 0.5])
    assert main(["run", write(tmp_path, cfg), "-o", str(tmp_path / "o.csv")]) == 0
    cfg["method"] = {"weak_ode": {"dt": 0.01, "mode": "full"}}
    assert main(["run", write(tmp_path, cfg), "-o", str(tmp_path / "w.csv")]) == 0
    assert main(["compare", str(tmp_path / "o.csv"), str(tmp_path / "w.csv"), "--atol", "1e-4"]) == 0


def test_module_entry_point_version():
    out = subprocess.run([sys.executable, "-m", "mtcf", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("mtcf ")


from hypothesis import given, settings, strategies as st  # noqa: E402

finite = st.floats(-50, 50, allow_nan=False)
cplx = st.builds(complex, finite, finite)


@settings(max_examples=40, deadline=None)
@given(omega=finite, scale=st.floats(0, 3), psi=st.lists(cplx, min_size=2, max_size=2),
       modes=st.lists(st.tuples(cplx, finite), min_size=1, max_size=3),
       t=st.floats(0, 10), span=st.integers(0, 20), n=st.integers(1, 10**6), seed=st.integers(0, 2**32))
def test_config_serialization_round_trip(omega, scale, psi, modes, t, span, n, seed):
    from mtcf.config import BathBlock, MethodBlock, ScenarioConfig, SystemBlock, TimesBlock
    cfg = ScenarioConfig(
        SystemBlock("sigma_12", scale, tuple(psi), omega), BathBlock("modes", tuple(modes)),
        ("sigma_x", "sigma_y"), TimesBlock((t,), start=t, end=t + 0.5 * span, step=0.5),
        MethodBlock("mc", {"n_traj": n, "seed": seed, "o_strategy": "zeroth_order"}))
    assert loads(cfg.to_json()) == cfg
