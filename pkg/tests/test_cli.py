import json
import os

import numpy as np
import pytest

from mcgl import cli


def run_cli(tmp_path, *argv, config_lines=()):
    cfgfile = tmp_path / "run.ini"
    body = "[output]\ndir = " + str(tmp_path / "out") + "\n"
    if config_lines:
        body += "\n".join(config_lines) + "\n"
    cfgfile.write_text(body)
    code = cli.main(["--config", str(cfgfile), *argv])
    return code, tmp_path / "out"


def test_maxwell_point_json(tmp_path, capsys):
    code, out = run_cli(tmp_path, "maxwell-point",
                        config_lines=["[potential]",
                                      "coeffs = 2.25, -5.9, 5.5, -2.0, 0.25"])
    assert code == 0
    payload = json.loads((out / "maxwell_point.json").read_text())
    # tilt t = 0.1 family: sigma0 = 0.1, b0 = 0, wells at 1 and 3
    assert payload["sigma0"] == pytest.approx(0.1, abs=1e-10)
    assert payload["b0"] == pytest.approx(0.0, abs=1e-10)
    assert payload["alpha0"] == pytest.approx(1.0, abs=1e-10)
    assert payload["beta0"] == pytest.approx(3.0, abs=1e-10)
    assert "config_hash" in payload


def test_invalid_potential_exit_code(tmp_path):
    code, _ = run_cli(tmp_path, "maxwell-point",
                      config_lines=["[potential]",
                                    "coeffs = 0, 0, 0, 0, 1"])
    assert code == 2


def test_solve_artifacts_and_header(tmp_path):
    code, out = run_cli(tmp_path, "solve", "--eps", "0.1", "--r", "2")
    assert code == 0
    payload = json.loads((out / "solve_eps0.1_r2.json").read_text())
    assert abs(payload["res0"]) < 1e-9 and abs(payload["res1"]) < 1e-9
    lines = (out / "profile_eps0.1_r2.csv").read_text().splitlines()
    assert lines[0].startswith("# mcgl")
    assert lines[1] == "x,u"
    assert len(lines) == 2003


def test_solve_out_of_domain_exit_codes(tmp_path):
    assert run_cli(tmp_path, "solve", "--eps", "0.1", "--r", "0.5")[0] == 3
    assert run_cli(tmp_path, "solve", "--eps", "3.0", "--r", "2")[0] == 3


def test_sweep_deterministic_and_sorted(tmp_path, monkeypatch):
    lines = ["[sweep]", "eps_list = 0.2, 0.1", "r_list = 2.0, 1.5"]
    code, out = run_cli(tmp_path, "sweep", config_lines=lines)
    assert code == 0
    first = (out / "convergence.csv").read_bytes()

    monkeypatch.setenv("MCGL_THREADS", "1")
    code, out = run_cli(tmp_path, "sweep", config_lines=lines)
    assert code == 0
    assert (out / "convergence.csv").read_bytes() == first

    rows = first.decode().splitlines()
    assert rows[1].split(",")[:2] == ["eps", "r"][:2]
    keys = [(float(r.split(",")[1]), -float(r.split(",")[0]))
            for r in rows[2:]]
    assert keys == sorted(keys)


def test_sweep_reports_failures_without_aborting(tmp_path):
    # r = 1.1 is outside the guarded mass window: that row must carry NaN
    # fields and a status instead of killing the sweep
    lines = ["[sweep]", "eps_list = 0.1", "r_list = 2.0, 1.1"]
    code, out = run_cli(tmp_path, "sweep", config_lines=lines)
    assert code == 0
    rows = (out / "convergence.csv").read_text().splitlines()[2:]
    assert len(rows) == 2
    by_status = {r.split(",")[-1]: r for r in rows}
    assert "ok" in by_status
    bad = [r for s, r in by_status.items() if s != "ok"]
    assert len(bad) == 1 and "NaN" in bad[0]


def test_rank_puts_maxwell_first(tmp_path):
    code, out = run_cli(tmp_path, "rank", "--eps", "0.1", "--r", "2")
    assert code == 0
    rows = (out / "rank.csv").read_text().splitlines()
    assert rows[2].split(",")[0] == "maxwell"


def test_second_variation_negative_j(tmp_path):
    code, out = run_cli(tmp_path, "second-variation",
                        "--eps", "0.05", "--r", "2", "--n", "2")
    assert code == 0
    payload = json.loads((out / "second_variation.json").read_text())
    assert payload["J"] < 0.0


def test_limit_check_sup_dev_decreasing(tmp_path):
    code, out = run_cli(tmp_path, "limit-check",
                        config_lines=["[limit]",
                                      "eps_list = 0.2, 0.1, 0.05",
                                      "grid_size = 2001"])
    assert code == 0
    rows = (out / "limit.csv").read_text().splitlines()[2:]
    sup = [float(r.split(",")[2]) for r in rows]
    assert sup == sorted(sup, reverse=True)
    assert len(sup) == 3


def test_simulate_short_run_traces(tmp_path):
    code, out = run_cli(
        tmp_path, "simulate", "--eps", "0.1", "--init", "spinodal",
        config_lines=["[simulate]", "n_cells = 64", "t_end = 0.001"])
    assert code == 0
    trace = (out / "trace.csv").read_text().splitlines()
    assert trace[1] == "t,mass,energy"
    energies = [float(r.split(",")[2]) for r in trace[2:]]
    assert all(b <= a + 1e-12 * abs(a)
               for a, b in zip(energies, energies[1:]))
    snap = np.loadtxt(out / "snapshot.csv", delimiter=",", skiprows=2)
    assert snap.shape == (64, 2)
