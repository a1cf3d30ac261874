import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from su2depol import cli
from su2depol.cli import ScenarioConfig, build_state, main

R3 = np.sqrt(3)


def read_csv(path):
    text = path.read_bytes().decode("utf-8")
    rows = list(csv.reader(io.StringIO(text)))
    return text, rows[0], np.array(rows[1:], dtype=float)


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    assert code == 0
    return read_csv(out)


def test_evolve_csv_format(tmp_path):
    text, header, data = run(tmp_path, "evolve", "--n", "2", "--steps", "10")
    assert header == ["t", "P_s", "P_Q", "D", "purity", "trace_M", "Sx", "Sy", "Sz"]
    assert "\r" not in text and text.endswith("\n")
    assert data.shape == (11, 9)
    assert np.all(np.diff(data[:, 0]) > 0)
    assert data[0, 1] == pytest.approx(1.0)
    # 15 significant digits at most
    for cell in text.splitlines()[1].split(","):
        assert len(cell.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) <= 15


def test_reruns_are_byte_identical(tmp_path):
    a = run(tmp_path, "evolve", "--state", "noon", "--method", "mc", "--samples", "512", "--steps", "3", name="a.csv")
    b = run(tmp_path, "evolve", "--state", "noon", "--method", "mc", "--samples", "512", "--steps", "3", name="b.csv")
    assert a[0] == b[0]


def test_zero_horizon_gives_single_row(tmp_path):
    _, _, data = run(tmp_path, "evolve", "--t-max", "0")
    assert data.shape == (1, 9)


@pytest.mark.parametrize("state", ["coherent:1.0,0.5", "noon", "fock:1"])
def test_ode_and_multipole_columns_agree(tmp_path, state):
    _, _, ode = run(tmp_path, "evolve", "--n", "3", "--state", state, "--method", "ode", name="o.csv")
    _, _, mp = run(tmp_path, "evolve", "--n", "3", "--state", state, "--method", "multipole", name="m.csv")
    _, _, gm = run(tmp_path, "evolve", "--n", "3", "--state", state, "--method", "gellmann", name="g.csv")
    np.testing.assert_allclose(ode, mp, atol=1e-8)
    np.testing.assert_allclose(gm, mp, atol=1e-9)


def test_twin_total_variance_is_constant(tmp_path):
    _, _, data = run(tmp_path, "evolve", "--state", "twin", "--n", "2")
    np.testing.assert_allclose(data[:, 5], 8.0, atol=1e-10)


def test_physical_time_rescales_with_nu(tmp_path):
    _, _, a = run(tmp_path, "evolve", "--nu", "2", "--t-max", "0.15", name="a.csv")
    _, _, b = run(tmp_path, "evolve", name="b.csv")
    np.testing.assert_allclose(a[:, 1:], b[:, 1:], atol=1e-12)


def test_mc_columns_bracket_the_exact_decay(tmp_path):
    _, header, data = run(tmp_path, "evolve", "--method", "mc", "--samples", "20000", "--steps", "3")
    assert header[-8:] == [f"{h}_stderr" for h in cli.OBSERVABLES]
    t, ps, err = data[:, 0], data[:, 1], data[:, 9]
    assert err[0] == 0 and np.all(err[1:] > 0)
    assert np.all(np.abs(ps - np.exp(-8 * t)) <= 3 * err + 1e-12)


def test_mc_compare(tmp_path):
    _, header, data = run(tmp_path, "mc-compare", "--samples", "20000", "--steps", "2")
    assert header == ["t", "trace_distance", "P_s_mc", "P_s_stderr", "P_s_exact"]
    assert np.all(data[:, 1] < 1e-2)
    np.testing.assert_allclose(data[:, 4], np.exp(-8 * data[:, 0]), atol=1e-12)


def test_figures(tmp_path):
    _, header, f1 = run(tmp_path, "figure1", name="f1.csv")
    assert header == ["t", "ratio_coherent", "ratio_noon"]
    assert np.all(f1[1:, 2] < f1[1:, 1])
    _, header, f2 = run(tmp_path, "figure2", name="f2.csv")
    assert header == ["t", "ratio_n1", "ratio_n2", "ratio_n3", "ratio_n4"]
    np.testing.assert_allclose(f2[0, 1:], 1.0)
    assert np.all(np.diff(f2[1:, 1:], axis=1) > 0)


def test_matrix_subcommands(tmp_path):
    _, header, g = run(tmp_path, "gamma", "--n", "2", name="g.csv")
    assert header == [f"c{j}" for j in range(1, 9)]
    assert g[0, 5] == -8.0 and g[2, 7] == pytest.approx(-4 * R3, abs=1e-13)
    np.testing.assert_allclose(np.diag(g), [16, 16, 20, 24, 24, 16, 16, 12], atol=1e-12)
    _, _, p = run(tmp_path, "phi", "--n", "2", name="p.csv")
    assert p[7, 7] == pytest.approx(0.6, abs=1e-12)
    assert p[0, 5] == pytest.approx(0.3, abs=1e-12)
    g_text, p_text = cli.run_matrices(2, 1.0)
    assert g_text.splitlines()[0].startswith("c1,c2")


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"state": "noon", "n": 3, "t-max": 0.1, "steps": 4}))
    _, _, data = run(tmp_path, "evolve", "--config", str(cfg), "--steps", "2")
    assert data.shape == (3, 9)
    assert data[-1, 0] == pytest.approx(0.1)
    assert data[0, 8] == pytest.approx(0.0, abs=1e-12)


def test_json_state_input(tmp_path):
    path = tmp_path / "state.json"
    path.write_text(build_state("coherent:0.3,0.2", 2).to_json())
    _, _, a = run(tmp_path, "evolve", "--state", str(path), name="a.csv")
    _, _, b = run(tmp_path, "evolve", "--state", f"json:{path}", name="b.csv")
    _, _, c = run(tmp_path, "evolve", "--state", "coherent:0.3,0.2", name="c.csv")
    np.testing.assert_allclose(a, c, atol=1e-12)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("args", [
    ["evolve", "--state", "fock:5", "--n", "2"],
    ["evolve", "--state", "twin", "--n", "3"],
    ["evolve", "--state", "rainbow"],
    ["evolve", "--nu", "0"],
    ["evolve", "--t-max", "-1"],
    ["evolve", "--method", "euler"],
    ["evolve", "--mc-steps", "3"],
    ["gamma", "--n", "0"],
    ["teleport"],
])
def test_configuration_errors_exit_2(args, capsys):
    assert main(args) == 2


def test_bad_config_files_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["evolve", "--config", str(bad)]) == 2
    bad.write_text(json.dumps({"colour": "blue"}))
    assert main(["evolve", "--config", str(bad)]) == 2
    state = tmp_path / "state.json"
    state.write_text(json.dumps({"sectors": [{"n": 1, "weight": 1.0, "rho": [[2, 0], [0, -1]]}]}))
    assert main(["evolve", "--state", str(state)]) == 2


def test_invariant_violation_exits_3(monkeypatch):
    monkeypatch.setattr(cli, "_ratio_by_multipoles", lambda rho, nu, times: np.zeros_like(times))
    assert main(["figure1"]) == 3


def test_io_errors_exit_4(tmp_path):
    assert main(["evolve", "--out", str(tmp_path / "missing" / "x.csv")]) == 4
    assert main(["evolve", "--state", str(tmp_path / "absent.json")]) == 4
    assert main(["evolve", "--config", str(tmp_path / "absent.json")]) == 4


def test_stdout_and_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "su2depol", "gamma", "--n", "1"],
                          capture_output=True, text=True, check=True)
    rows = list(csv.reader(io.StringIO(proc.stdout)))
    assert rows[0] == ["c1", "c2", "c3"]
    np.testing.assert_allclose(np.array(rows[1:], dtype=float), 8 * np.eye(3))


def test_scenario_config_times():
    assert len(ScenarioConfig(steps=7).times()) == 8
    with pytest.raises(cli.ConfigError):
        ScenarioConfig(n=1.5).validate()
