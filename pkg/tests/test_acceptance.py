"""Acceptance criteria, each at its stated tolerance.

Every test appends one PASS/FAIL line to the terminal summary before asserting.
"""

import math
import time

import numpy as np
import pytest

from bgkheat import cli
from bgkheat.phase_space import build_grid, maxwellian, maxwellian_field
from bgkheat.series import read_csv

from conftest import VERDICTS, brute_force_entropy

# recorded at first build from the criterion-2 run, checked against the brute-force entropy oracle
H_REL_INITIAL_REF = 0.09958774555818795
H_REL_FINAL_REF = 5.211003041870332e-06


def verdict(number, ok, detail):
    VERDICTS.append(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, detail


def invoke(out, *args):
    start = time.perf_counter()
    code = cli.main([args[0], "--out", str(out), "--quiet", *args[1:]])
    return code, time.perf_counter() - start


CRITERION2 = ("simulate", "--preset", "smooth-wave", "--set", "grid.nx=128", "--set", "grid.nv=257",
              "--set", "grid.v_max=8", "--set", "solver.dt=1e-3", "--set", "solver.t_final=5",
              "--set", "solver.D=1", "--set", "solver.temperature_floor=0",
              "--set", "solver.diagnostics_stride=1")


@pytest.fixture(scope="module")
def criterion2_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("criterion2")
    code, elapsed = invoke(out, *CRITERION2)
    _, series = read_csv(out / "diagnostics.csv")
    return out, code, elapsed, series


@pytest.fixture(scope="module")
def spectrum_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("spectrum")
    code, elapsed = invoke(out, "linear-spectrum", "--set", "grid.nx=64", "--set", "grid.nv=129",
                           "--set", "grid.v_max=8", "--set", "linear.k_max=32", "--set", "solver.D=1",
                           "--set", "equilibrium.rho_inf=1", "--set", "equilibrium.T_inf=1")
    _, table = read_csv(out / "spectrum.csv")
    return code, elapsed, table


def test_criterion_1_moment_identities():
    start = time.perf_counter()
    worst = 0.0
    for T in (0.25, 1.0, 2.0, 4.0):
        g = build_grid(64, 257, 8 * math.sqrt(T))
        M, v, w = maxwellian(T, g), g.velocity_nodes, g.velocity_weights
        worst = max(worst, abs(w @ M - 1), abs(w @ (v**2 * M) - T / 2), abs(w @ (v**4 * M) - 3 * T**2 / 4))
    elapsed = time.perf_counter() - start
    verdict(1, worst < 1e-9 and elapsed < 1.0, f"max moment error {worst:.2e} (< 1e-9), {elapsed:.3f} s (< 1 s)")


def test_criterion_2_conservation(criterion2_run):
    _, code, elapsed, series = criterion2_run
    mass, energy = series.column("mass"), series.column("total_energy")
    dm = np.max(np.abs(mass - mass[0])) / mass[0]
    de = np.max(np.abs(energy - energy[0])) / energy[0]
    ok = dm < 1e-10 and de < 1e-8 and elapsed < 120 and math.isclose(series.last("time"), 5.0)
    verdict(2, ok, f"mass drift {dm:.2e} (< 1e-10), energy drift {de:.2e} (< 1e-8), "
                   f"{elapsed:.1f} s (< 120 s), exit {code}")


def test_criterion_3_entropy_decay(criterion2_run):
    _, _, _, series = criterion2_run
    H, H_rel = series.column("H"), series.column("H_rel")
    g = build_grid(128, 257, 8.0)
    x = g.x
    rho0, T0 = 1 + 0.5 * np.cos(2 * np.pi * x), 1 + 0.3 * np.sin(2 * np.pi * x)
    oracle = brute_force_entropy(rho0[:, None] * maxwellian_field(T0, g), T0, g)
    worst = float(np.max(np.diff(H)))
    ratio = H_rel[-1] / H_rel[0]
    regression = (math.isclose(H_rel[0], H_REL_INITIAL_REF, rel_tol=1e-9)
                  and math.isclose(H_rel[-1], H_REL_FINAL_REF, rel_tol=1e-6))
    ok = worst < 1e-10 and ratio < 0.2 and abs(oracle - H[0]) < 1e-12 and regression
    verdict(3, ok, f"largest per-step increase of H {worst:.2e} (< 1e-10), H_rel(5)/H_rel(0) = {ratio:.3e} "
                   f"(< 0.2), oracle gap {abs(oracle - H[0]):.1e}, regression match {regression}")


def test_criterion_4_spectral_hypocoercivity(spectrum_run):
    code, elapsed, table = spectrum_run
    absc = table.column("abscissa")
    k = table.column("k")
    sym, anti = table.column("symmetry_residual").max(), table.column("antisymmetry_residual").max()
    ok = (list(k) == list(range(33)) and absc[0] < 0 and absc[1:].max() < 0
          and sym < 1e-10 and anti < 1e-10 and elapsed < 60)
    verdict(4, ok, f"k=0 abscissa {absc[0]:.4f}, max over 1<=k<=32 {absc[1:].max():.4f} (< 0), "
                   f"residuals {sym:.1e}/{anti:.1e} (< 1e-10), {elapsed:.1f} s (< 60 s)")


def test_criterion_5_lyapunov(tmp_path, spectrum_run):
    _, _, table = spectrum_run
    code_c, _ = invoke(tmp_path / "constants", "constants", "--set", "grid.nx=64", "--set", "grid.nv=129",
                       "--set", "equilibrium.rho_inf=1", "--set", "equilibrium.T_inf=1", "--set", "solver.D=1")
    _, consts = read_csv(tmp_path / "constants" / "constants.csv")
    c = dict(consts.rows)
    s_max = float(table.column("abscissa").max())
    code_d, _ = invoke(tmp_path / "decay", "linear-decay", "--preset", "pi-mode", "--set", "grid.nx=16",
                       "--set", "grid.nv=129", "--set", "solver.dt=1e-3", "--set", "solver.t_final=10",
                       "--set", "solver.diagnostics_stride=1")
    _, summary = read_csv(tmp_path / "decay" / "summary.csv")
    _, decay = read_csv(tmp_path / "decay" / "decay.csv")
    s = dict(summary.rows)
    rise = float(np.max(np.diff(decay.column("modified_entropy"))))
    ok = (abs(c["lambda_M"] - 2 * math.pi**2) <= 1e-9 and abs(c["C_M"] - (1 + math.sqrt(3))) <= 1e-12
          and 0 < c["lambda_certified"] <= abs(s_max)
          and s["lambda_fit"] >= s["lambda_certified"] and rise <= 1e-8 and code_c == 0 and code_d == 0)
    verdict(5, ok, f"lambda_M {c['lambda_M']:.12f}, C_M {c['C_M']:.13f}, lambda_certified "
                   f"{c['lambda_certified']:.4f} <= {abs(s_max):.4f}, lambda_fit {s['lambda_fit']:.4f} >= "
                   f"{s['lambda_certified']:.4f}, modified entropy max rise {rise:.1e} (<= 1e-8)")


def test_criterion_6_operator_norms(spectrum_run):
    _, _, table = spectrum_run
    a, ta, pitpi = (table.column(c).max() for c in ("norm_A", "norm_TA", "norm_PiTPi"))
    ok = a <= 0.5 + 1e-9 and ta <= 1 + 1e-9 and pitpi < 1e-11
    verdict(6, ok, f"||A|| {a:.4f} (<= 0.5), ||TA|| {ta:.4f} (<= 1), Pi T Pi {pitpi:.1e} (< 1e-11)")


def test_criterion_7_heat_oracle(tmp_path):
    code, elapsed = invoke(tmp_path, "green-check")
    _, table = read_csv(tmp_path / "checks.csv")
    rows = {r[0]: r for r in table.rows}
    masses = [r for name, r in rows.items() if name.startswith("kernel_mass")]
    ok = (code == 0 and len(masses) == 4 and all(r[3] == "true" for r in table.rows)
          and rows["oracle_match_initial"][1] < 1e-6 and elapsed < 30)
    verdict(7, ok, f"{len(masses)} kernel-mass rows, worst {max(r[1] for r in masses):.1e} (< 1e-12), "
                   f"oracle error {rows['oracle_match_initial'][1]:.1e} (< 1e-6), "
                   f"positivity {rows['positivity'][3]}, {elapsed:.1f} s (< 30 s)")


def test_criterion_8_macroscopic_limit(tmp_path):
    code, elapsed = invoke(tmp_path, "sweep-epsilon", "--set", "macro.eps_list=0.4,0.2,0.1,0.05",
                           "--set", "macro.t_star=0.5")
    _, table = read_csv(tmp_path / "sweep.csv")
    _, summary = read_csv(tmp_path / "sweep_summary.csv")
    err = table.column("error")
    slope = dict(summary.rows)["slope"]
    decreasing = bool(np.all(np.diff(err) < 0))
    ok = decreasing and slope >= 0.9 and elapsed < 600 and code == 0
    verdict(8, ok, f"errors {', '.join(f'{e:.2e}' for e in err)} strictly decreasing: {decreasing}, "
                   f"slope {slope:.3f} (>= 0.9), {elapsed:.1f} s (< 600 s)")


def test_criterion_9_determinism(tmp_path, criterion2_run):
    first_dir = criterion2_run[0]
    invoke(tmp_path, *CRITERION2)
    same = all((first_dir / name).read_bytes() == (tmp_path / name).read_bytes()
               for name in ("diagnostics.csv", "checks.csv"))
    verdict(9, same, "two identical criterion-2 invocations give bit-identical CSVs" if same
            else "criterion-2 CSVs differ between identical invocations")
