import json
import math
import subprocess
import sys

import pytest

from bgkheat import cli
from bgkheat.errors import SolverFault
from bgkheat.series import read_csv

SMALL = ["--set", "grid.nx=16", "--set", "grid.nv=65", "--set", "grid.v_max=8"]
# nonlinear runs need enough x resolution for the spectral shift to stay nonnegative
KINETIC = ["--set", "grid.nx=64", "--set", "grid.nv=65", "--set", "grid.v_max=8"]


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = cli.main([args[0], "--out", str(out), *args[1:]])
    return code, out


def checks(out):
    _, table = read_csv(out / "checks.csv")
    return {row[0]: row[3] == "true" for row in table.rows}


def test_constants_report(tmp_path, capsys):
    code, out = run(tmp_path, "constants", *SMALL)
    assert code == 0
    _, table = read_csv(out / "constants.csv")
    values = {name: value for name, value in table.rows}
    assert abs(values["lambda_M"] - 19.739) < 1e-3 and abs(values["C_M"] - 2.7321) < 1e-4
    assert "lambda_M = 19.739" in capsys.readouterr().out


def test_simulate_equilibrium_preset(tmp_path):
    code, out = run(tmp_path, "simulate", "--preset", "equilibrium", *SMALL,
                    "--set", "solver.t_final=0.1", "--set", "solver.diagnostics_stride=1")
    assert code == 0 and all(checks(out).values())
    _, series = read_csv(out / "diagnostics.csv")
    assert len(series) == 101 and max(abs(v) for v in series.column("H_rel")) <= 1e-12
    assert not (out / "failures.json").exists()


def test_simulate_snapshots(tmp_path):
    code, out = run(tmp_path, "simulate", *KINETIC, "--set", "solver.t_final=0.05", "--set", "output.snapshots=yes")
    assert code == 0
    _, fields = read_csv(out / "fields_final.csv")
    assert fields.columns == ("x", "rho", "T") and len(fields) == 64


def test_underresolved_run_reports_negative_f(tmp_path):
    code, out = run(tmp_path, "simulate", *SMALL, "--set", "solver.t_final=0.05")
    assert code == cli.EXIT_CHECK_FAILED
    failures = json.loads((out / "failures.json").read_text())["failures"]
    assert [f["check"] for f in failures] == ["f_nonnegative"]


def test_green_check_table(tmp_path):
    code, out = run(tmp_path, "green-check", "--set", "grid.nx=64")
    names = checks(out)
    assert code == 0 and all(names.values())
    assert sum(n.startswith("kernel_mass") for n in names) == 4
    assert {"positivity", "oracle_match_initial", "oracle_match_source"} <= set(names)


def test_failed_check_writes_manifest(tmp_path):
    code, out = run(tmp_path, "green-check", "--set", "grid.nx=64", "--set", "heat.times=1e-6,1")
    assert code == cli.EXIT_CHECK_FAILED
    manifest = json.loads((out / "failures.json").read_text())
    assert manifest["status"] == "failed"
    assert [f["check"] for f in manifest["failures"]] == ["kernel_mass_t=1e-06"]


def test_invalid_config_manifest(tmp_path, capsys):
    code, out = run(tmp_path, "simulate", "--set", "solver.dt=-1", "--set", "solver.foo=1")
    assert code == cli.EXIT_BAD_CONFIG
    manifest = json.loads((out / "failures.json").read_text())
    assert manifest["status"] == "invalid-config" and len(manifest["violations"]) == 2
    assert "dt" in capsys.readouterr().err


def test_aborted_run_manifest(tmp_path, monkeypatch):
    def boom(cfg):
        raise SolverFault("temperature collapsed")

    monkeypatch.setattr(cli, "run_subcommand", boom)
    code, out = run(tmp_path, "simulate")
    assert code == cli.EXIT_ABORTED
    manifest = json.loads((out / "failures.json").read_text())
    assert manifest["error"] == "SolverFault" and manifest["config"]["seed"] == 0


def test_outputs_are_deterministic_and_self_describing(tmp_path):
    args = ["simulate", *KINETIC, "--set", "solver.t_final=0.05", "--seed", "17", "--preset", "random-smooth"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main([args[0], "--out", str(a), *args[1:]]) == 0
    assert cli.main([args[0], "--out", str(b), *args[1:]]) == 0
    for name in ("diagnostics.csv", "checks.csv"):
        text = (a / name).read_text()
        assert text == (b / name).read_text()
        first, header = text.splitlines()[:2]
        config = json.loads(first[len("# config: "):])
        assert config["seed"] == 17 and config["initial"]["preset"] == "random-smooth"
        assert header.split(",")[0] in ("time", "check")


def test_seed_changes_random_data(tmp_path):
    base = ["simulate", *KINETIC, "--set", "solver.t_final=0.01", "--preset", "random-smooth"]
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main([base[0], "--out", str(a), "--seed", "1", *base[1:]])
    cli.main([base[0], "--out", str(b), "--seed", "2", *base[1:]])
    _, sa = read_csv(a / "diagnostics.csv")
    _, sb = read_csv(b / "diagnostics.csv")
    assert sa.column("H")[0] != sb.column("H")[0]


def test_linear_spectrum_small(tmp_path):
    code, out = run(tmp_path, "linear-spectrum", *SMALL, "--set", "linear.k_max=8", "--set", "linear.random_states=10")
    assert code == 0
    _, table = read_csv(out / "spectrum.csv")
    assert len(table) == 9 and max(table.column("abscissa")) < 0


def test_linear_decay_small(tmp_path):
    code, out = run(tmp_path, "linear-decay", *SMALL, "--set", "solver.t_final=3", "--set", "solver.dt=2e-3")
    assert code == 0
    _, table = read_csv(out / "decay.csv")
    assert table.columns == ("time", "H_L", "modified_entropy")


def test_linear_decay_random_admissible(tmp_path):
    code, _ = run(tmp_path, "linear-decay", "--preset", "random-admissible", "--seed", "3", *SMALL,
                  "--set", "solver.t_final=3", "--set", "solver.dt=2e-3")
    assert code == 0


def test_macro_run_small(tmp_path):
    code, out = run(tmp_path, "macro-run", "--set", "grid.nx=16", "--set", "solver.t_final=0.01",
                    "--set", "macro.snapshot_stride=50")
    assert code == 0
    _, table = read_csv(out / "macro.csv")
    assert len(table) == 3 * 16 and math.isclose(table.column("time")[-1], 0.01)


def test_sweep_small(tmp_path):
    code, out = run(tmp_path, "sweep-epsilon", "--set", "grid.nx=16", "--set", "grid.nv=65",
                    "--set", "grid.T_cap=1.3", "--set", "macro.eps_list=0.4,0.2",
                    "--set", "macro.t_star=0.1")
    _, table = read_csv(out / "sweep.csv")
    assert len(table) == 2
    assert code == 0, (out / "failures.json").read_text()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bgkheat", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("simulate", "linear-spectrum", "linear-decay", "macro-run", "sweep-epsilon",
                 "green-check", "constants"):
        assert name in proc.stdout


def test_bad_seed_rejected_by_argparse():
    with pytest.raises(SystemExit):
        cli.main(["constants", "--seed", "-3"])
