import json

import numpy as np
import pytest

from burgers2d.cli import main
from burgers2d.config import parse_config
from burgers2d.errors import ConfigError
from burgers2d.grid import AlphaConvention
from burgers2d.runner import run

TABLE2 = ('{"command":"solve","problem":"case2","scheme":"compact_adi","N":40,"M":40,'
          '"dt":0.001,"t_end":0.01,"Re":1}')


def test_parse_table2_config():
    cfg = parse_config(TABLE2)
    assert (cfg.command, cfg.problem, cfg.scheme) == ("solve", "case2", "compact_adi")
    assert (cfg.N, cfg.M, cfg.dt, cfg.t_end, cfg.Re) == (40, 40, 0.001, 0.01, 1.0)
    assert cfg.newton_tol == 1e-10 and cfg.newton_max_iters == 25 and cfg.n_theta == 129
    assert cfg.alpha_convention == AlphaConvention.HALF_STEP.value
    assert cfg.snapshot_times == [0.01]


def test_missing_dt_names_key():
    d = json.loads(TABLE2)
    del d["dt"]
    with pytest.raises(ConfigError, match="'dt'") as exc:
        parse_config(json.dumps(d))
    assert exc.value.key == "dt"


def test_stability_config():
    cfg = parse_config('{"command":"stability","c_min":0,"c_max":1,"c_steps":21,'
                       '"d_min":0.01,"d_max":0.5,"d_steps":10}')
    assert len(cfg.c_values) == 21 and len(cfg.d_values) == 10
    assert cfg.c_values[0] == 0 and cfg.c_values[-1] == 1
    assert cfg.d_values[0] == 0.01 and cfg.d_values[-1] == 0.5


@pytest.mark.parametrize("patch,key", [
    ({"N": -4}, "N"), ({"scheme": "rk4"}, "scheme"), ({"problem": "case3"}, "problem"),
    ({"Nx": 3}, "Nx"), ({"dt": "0.1"}, "dt"), ({"N": 10.5}, "N"),
    ({"snapshot_times": [0.5]}, "snapshot_times"), ({"alpha_convention": "x"}, "alpha_convention"),
])
def test_validation_errors(patch, key):
    d = {**json.loads(TABLE2), **patch}
    with pytest.raises(ConfigError) as exc:
        parse_config(json.dumps(d))
    assert exc.value.key == key


def test_command_mismatch():
    with pytest.raises(ConfigError):
        parse_config(TABLE2, command="stability")
    assert parse_config(TABLE2, command="solve").command == "solve"
    with pytest.raises(ConfigError):
        parse_config("[1, 2]")
    with pytest.raises(ConfigError):
        parse_config("{not json")


def _write(tmp_path, obj):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


def test_cli_solve_end_to_end(tmp_path):
    out = tmp_path / "out"
    rc = main(["solve", "--config", _write(tmp_path, TABLE2), "--out", str(out)])
    assert rc == 0
    summary = json.loads((out / "summary.json").read_text())
    for key in ("status", "steps", "E_u", "E_v", "newton_iters_max", "wall_seconds"):
        assert key in summary
    assert summary["status"] == "completed" and summary["steps"] == 10
    assert summary["wall_seconds"] >= 0
    snap = out / "fields_t0.01.csv"
    lines = snap.read_text().splitlines()
    assert lines[0] == "x,y,u,v" and len(lines) == 1 + 41 * 41
    data = np.loadtxt(snap, delimiter=",", skiprows=1)
    # row-major over j then i
    assert np.all(data[:41, 1] == 0.0) and data[1, 0] == pytest.approx(0.025)
    row = data[(data[:, 0] == 0.4) & (np.abs(data[:, 1] - 0.4) < 1e-12)]
    assert row[0, 2] == pytest.approx(0.72285, abs=0.01)
    # deterministic output
    out2 = tmp_path / "out2"
    main(["solve", "--config", _write(tmp_path, TABLE2), "--out", str(out2)])
    assert (out2 / "fields_t0.01.csv").read_bytes() == snap.read_bytes()


def test_cli_config_error_exit_code(tmp_path, capsys):
    d = json.loads(TABLE2)
    del d["dt"]
    assert main(["solve", "--config", _write(tmp_path, d)]) == 1
    assert "dt" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == 1


def test_cli_divergence_exit_code(tmp_path):
    cfg = {"command": "solve", "problem": "case2", "scheme": "dufort_frankel",
           "N": 20, "M": 20, "dt": 0.05, "t_end": 2.0, "Re": 1}
    out = tmp_path / "o"
    assert main(["solve", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 2
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "diverged" and summary["failed_step"] >= 1
    assert not list(out.glob("*.csv"))  # no partial snapshots


def test_stability_command(tmp_path):
    cfg = parse_config('{"command":"stability","c_min":0.35,"c_max":1.0,"c_steps":14,'
                       f'"d_min":0.5,"d_max":0.5,"d_steps":1,"out_dir":"{tmp_path}"}}')
    s = run(cfg)
    assert s.ok
    data = np.loadtxt(tmp_path / "stability.csv", delimiter=",", skiprows=1, ndmin=2)
    assert data.shape == (14, 3) and np.all(data[:, 2] > 1)


def test_convergence_command(tmp_path):
    cfg = parse_config(json.dumps({"command": "convergence", "problem": "case1a",
                                   "grids": [10, 20], "dt": 0.01, "t_end": 0.05,
                                   "out_dir": str(tmp_path)}))
    s = run(cfg)
    assert s.ok
    text = (tmp_path / "convergence.csv").read_text().splitlines()
    assert text[0].startswith("N,M,dt,E_u,E_v,order_u") and len(text) == 3


def test_compare_command_and_threads(tmp_path, monkeypatch):
    base = {"command": "compare", "problem": "case2", "N": 10, "M": 10, "dt": 0.001,
            "t_end": 0.005, "Re": 1}
    s = run(parse_config(json.dumps({**base, "out_dir": str(tmp_path / "a")})))
    assert s.ok and "wall_ratio_dff_over_adi" in s.extra
    lines = (tmp_path / "a" / "compare.csv").read_text().splitlines()
    assert len(lines) == 6 and lines[0].startswith("x,y,u_compact_adi")
    monkeypatch.setenv("BURGERS2D_THREADS", "2")
    run(parse_config(json.dumps({**base, "threads": 4, "out_dir": str(tmp_path / "b")})))
    assert ((tmp_path / "a" / "compare.csv").read_bytes()
            == (tmp_path / "b" / "compare.csv").read_bytes())


def test_custom_problem_and_steady_stop(tmp_path):
    cfg = parse_config(json.dumps({
        "command": "solve", "problem": "custom", "domain": [0, 1, 0, 1],
        "initial_u": "sin(pi*x)*sin(pi*y)", "initial_v": "0*x", "Re": 1,
        "N": 10, "M": 10, "dt": 0.01, "t_end": 5.0, "steady_tol": 1e-6,
        "snapshot_times": [0.0], "out_dir": str(tmp_path)}))
    s = run(cfg)
    assert s.ok and s.steps < 500 and "steady" in s.message
    with pytest.raises(ConfigError):
        parse_config(json.dumps({"command": "solve", "problem": "custom", "Re": 1,
                                 "N": 10, "M": 10, "dt": 0.01}))
