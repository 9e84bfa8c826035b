"""Subcommand implementations: each returns tables plus a list of checks."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import heat_solver as hs
from . import linear_hypo as lh
from . import macro_limit as ml
from .config import ExperimentConfig
from .kinetic_solver import SimState, SolverConfig, run as kinetic_run
from .phase_space import PhaseGrid, build_grid, maxwellian_field
from .series import DiagnosticsSeries
from .thermo import EquilibriumParams

CHECK_COLUMNS = ("check", "value", "threshold", "passed", "detail")


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def row(self) -> tuple:
        return (self.name, float(self.value), float(self.threshold), "true" if self.passed else "false", self.detail)


def at_most(name: str, value: float, threshold: float, detail: str = "") -> Check:
    return Check(name, value, threshold, bool(value <= threshold), detail)


def at_least(name: str, value: float, threshold: float, detail: str = "") -> Check:
    return Check(name, value, threshold, bool(value >= threshold), detail)


@dataclass
class Outcome:
    subcommand: str
    checks: list[Check] = field(default_factory=list)
    tables: dict[str, DiagnosticsSeries] = field(default_factory=dict)
    report: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check_table(self) -> DiagnosticsSeries:
        table = DiagnosticsSeries(CHECK_COLUMNS)
        for c in self.checks:
            table.append(c.row())
        return table


# ---------------------------------------------------------------------------
# inputs


def grid_from(cfg: ExperimentConfig) -> PhaseGrid:
    g = cfg["grid"]
    return build_grid(g["nx"], g["nv"], g["v_max"])


def solver_from(cfg: ExperimentConfig) -> SolverConfig:
    s = cfg["solver"]
    return SolverConfig(s["dt"], s["D"], s["t_final"], s["temperature_floor"], s["splitting"],
                        s["diagnostics_stride"], s["eps"]).validate()


def equilibrium_from(cfg: ExperimentConfig) -> EquilibriumParams:
    e = cfg["equilibrium"]
    return EquilibriumParams(e["rho_inf"], e["T_inf"])


def _random_profile(rng: np.random.Generator, x: np.ndarray, amp: float, modes: int = 3) -> np.ndarray:
    p = np.zeros_like(x)
    for k in range(1, modes + 1):
        a, b = rng.standard_normal(2) / k
        p += a * np.cos(2 * np.pi * k * x) + b * np.sin(2 * np.pi * k * x)
    return amp * p / np.max(np.abs(p))


def initial_fields(cfg: ExperimentConfig, grid: PhaseGrid) -> tuple[np.ndarray, np.ndarray]:
    """(rho0, T0) for the macroscopic presets."""
    ini = cfg["initial"]
    x = grid.x
    one = np.ones(grid.nx)
    preset = ini["preset"]
    if preset == "equilibrium":
        return ini["rho_mean"] * one, ini["T_mean"] * one
    if preset == "smooth-wave":
        kx = 2 * np.pi * ini["mode"] * x
        return ini["rho_mean"] + ini["rho_amp"] * np.cos(kx), ini["T_mean"] + ini["T_amp"] * np.sin(kx)
    if preset == "random-smooth":
        rng = np.random.default_rng(cfg.seed)
        return (ini["rho_mean"] + _random_profile(rng, x, ini["rho_amp"]),
                ini["T_mean"] + _random_profile(rng, x, ini["T_amp"]))
    raise ValueError(f"preset {preset!r} has no macroscopic fields")


def kinetic_initial(cfg: ExperimentConfig, grid: PhaseGrid) -> SimState:
    rho0, T0 = initial_fields(cfg, grid)
    return SimState.from_fields(rho0[:, None] * maxwellian_field(T0, grid), T0, grid)


def linear_initial(cfg: ExperimentConfig, grid: PhaseGrid, eq: EquilibriumParams) -> lh.PerturbationState:
    ini = cfg["initial"]
    if ini["preset"] == "pi-mode":
        return lh.pi_mode_perturbation(eq, grid, ini["amplitude"], ini["mode"])
    rng = np.random.default_rng(cfg.seed)
    return lh.random_admissible_perturbation(eq, grid, rng, amplitude=ini["amplitude"])


def _pairs_table(pairs: dict) -> DiagnosticsSeries:
    table = DiagnosticsSeries(("name", "value"))
    for name, value in pairs.items():
        table.append((name, float(value)))
    return table


def _finite_and_increasing(series: DiagnosticsSeries) -> list[Check]:
    numeric = np.array([[float(v) for v in row] for row in series.rows])
    nonfinite = int(np.sum(~np.isfinite(numeric)))
    steps = np.diff(series.column("time"))
    return [
        at_most("columns_finite", nonfinite, 0, "count of non-finite entries"),
        at_least("time_increasing", float(steps.min()) if steps.size else math.inf, 1e-300,
                 "smallest time increment"),
    ]


# ---------------------------------------------------------------------------
# subcommands


def simulate(cfg: ExperimentConfig) -> Outcome:
    grid = grid_from(cfg)
    scfg = solver_from(cfg)
    out = Outcome("simulate")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        final, series = kinetic_run(kinetic_initial(cfg, grid), scfg, grid)
    out.report.extend(f"warning: {w.message}" for w in caught)
    out.tables["diagnostics"] = series

    mass, energy = series.column("mass"), series.column("total_energy")
    H, H_rel = series.column("H"), series.column("H_rel")
    out.checks += _finite_and_increasing(series)
    out.checks.append(at_most("mass_drift", float(np.max(np.abs(mass - mass[0]))) / abs(mass[0]), 1e-10,
                              "relative"))
    drift = float(np.max(np.abs(energy - energy[0]))) / abs(energy[0])
    if scfg.temperature_floor == 0:
        out.checks.append(at_most("energy_drift", drift, 1e-8, "relative"))
    else:
        out.report.append(f"energy drift {drift:.3e} (not asserted: temperature floor active)")
    dH = float(np.max(np.diff(H))) if len(H) > 1 else -math.inf
    out.checks.append(at_most("entropy_monotone", dH, 1e-10, "largest increase of H between rows"))
    out.checks.append(at_least("relative_entropy_nonnegative", float(H_rel.min()), -1e-12))
    out.checks.append(at_most("relative_entropy_decay", float(H_rel[-1] - H_rel[0]), 1e-12,
                              "final minus initial"))
    out.checks.append(at_least("f_nonnegative", float(series.column("f_min").min()), -1e-12))
    out.checks.append(Check("temperature_positive", float(series.column("T_min").min()), 0.0,
                            bool(series.column("T_min").min() > 0)))
    if cfg["initial"]["preset"] == "equilibrium":
        out.checks.append(at_most("stationary_relative_entropy", float(np.max(np.abs(H_rel))), 1e-12))

    if cfg["output"]["snapshots"]:
        fields = DiagnosticsSeries(("x", "rho", "T"))
        for row in zip(grid.x, final.rho, final.T):
            fields.append(tuple(float(v) for v in row))
        out.tables["fields_final"] = fields
    out.report.append(f"H_rel: {H_rel[0]:.6e} -> {H_rel[-1]:.6e} at t = {series.last('time'):g}")
    return out


def _constants_checks(c: lh.HypoConstants) -> list[Check]:
    return [
        at_least("delta_star_positive", c.delta_star, 1e-300),
        at_most("delta_star_below_one", c.delta_star, 1.0),
        at_least("kappa_positive", c.kappa, 1e-300),
        at_least("lambda_certified_positive", c.lambda_certified, 1e-300),
    ]


def constants(cfg: ExperimentConfig) -> Outcome:
    grid = grid_from(cfg)
    eq = equilibrium_from(cfg)
    c = lh.compute_constants(eq, grid, cfg["solver"]["D"])
    out = Outcome("constants")
    out.tables["constants"] = _pairs_table(c.as_dict())
    out.checks += _constants_checks(c)
    out.report += [f"{k} = {v:.12g}" for k, v in c.as_dict().items()]
    return out


def linear_spectrum(cfg: ExperimentConfig) -> Outcome:
    grid = grid_from(cfg)
    eq = equilibrium_from(cfg)
    D = cfg["solver"]["D"]
    model = lh.LinearModel.build(eq, grid)
    table = DiagnosticsSeries(("k", "abscissa", "symmetry_residual", "antisymmetry_residual",
                               "norm_A", "norm_TA", "norm_PiTPi"))
    for k in range(cfg["linear"]["k_max"] + 1):
        op = lh.build_mode_operator(k, eq, grid, D, model)
        norms = lh.mode_operator_norms(op)
        table.append((k, lh.spectral_abscissa(op), op.symmetry_residual(), op.antisymmetry_residual(),
                      norms["A"], norms["TA"], norms["PiTPi"]))
    c = lh.compute_constants(eq, grid, D)
    out = Outcome("linear-spectrum")
    out.tables["spectrum"] = table
    out.tables["constants"] = _pairs_table(c.as_dict())

    absc = table.column("abscissa")
    s_max = float(absc.max())
    out.checks += [
        at_most("abscissa_k0", float(absc[0]), -1e-300, "constrained, k = 0"),
        at_most("abscissa_max", s_max, -1e-300, "largest constrained abscissa over k"),
        at_most("symmetry_residual", float(table.column("symmetry_residual").max()), 1e-10),
        at_most("antisymmetry_residual", float(table.column("antisymmetry_residual").max()), 1e-10),
        at_most("norm_A", float(table.column("norm_A").max()), 0.5 + 1e-9),
        at_most("norm_TA", float(table.column("norm_TA").max()), 1.0 + 1e-9),
        at_most("norm_PiTPi", float(table.column("norm_PiTPi").max()), 1e-11),
        at_most("lambda_certified_vs_abscissa", c.lambda_certified, abs(s_max)),
    ]
    out.checks += _constants_checks(c)
    out.checks.append(_micro_coercivity_sampled(cfg, grid, eq, D, c.lambda_m, model))
    out.report += [f"max constrained abscissa = {s_max:.12g}"]
    out.report += [f"{k} = {v:.12g}" for k, v in c.as_dict().items()]
    return out


def _micro_coercivity_sampled(cfg, grid, eq, D, lambda_m, model) -> Check:
    """-<L F, F> >= lambda_m ||(1 - Pi) F||^2 on seeded random admissible states."""
    rng = np.random.default_rng(cfg.seed)
    worst = math.inf
    for _ in range(cfg["linear"]["random_states"]):
        F = lh.random_admissible_perturbation(eq, grid, rng)
        LF = lh.collision_generator(F, grid, D, model)
        PF = lh.project_pi(F, grid, model)
        micro = lh.PerturbationState(F.fhat - PF.fhat, F.That, eq)
        ratio = -lh.inner(LF, F, grid, model) / lh.norm_sq(micro, grid, model)
        worst = min(worst, ratio)
    return at_least("micro_coercivity_sampled", worst, lambda_m * (1 - 1e-9),
                    f"min ratio over {cfg['linear']['random_states']} states, seed {cfg.seed}")


def linear_decay(cfg: ExperimentConfig) -> Outcome:
    grid = grid_from(cfg)
    eq = equilibrium_from(cfg)
    scfg = solver_from(cfg)
    c = lh.compute_constants(eq, grid, scfg.D)
    report = lh.run_linear(linear_initial(cfg, grid, eq), scfg, grid, c.delta_star, c.lambda_certified)
    table = DiagnosticsSeries(("time", "H_L", "modified_entropy"))
    for row in zip(report.times, report.H_L, report.modified):
        table.append(tuple(float(v) for v in row))
    sandwich = (1 + c.delta_star) / (1 - c.delta_star)
    out = Outcome("linear-decay")
    out.tables["decay"] = table
    out.tables["summary"] = _pairs_table({
        **c.as_dict(), "lambda_fit": report.lambda_fit, "C_measured": report.C_measured,
        "C_bound": sandwich,
    })
    out.checks += _finite_and_increasing(table)
    out.checks += [
        at_least("lambda_fit_vs_certified", report.lambda_fit, c.lambda_certified),
        at_most("modified_entropy_monotone", float(np.max(np.diff(report.modified))), 1e-8,
                "largest increase between rows"),
        at_most("H_L_monotone", float(np.max(np.diff(report.H_L))), 1e-8, "largest increase between rows"),
        at_most("constant_vs_sandwich", report.C_measured, sandwich),
    ]
    out.report.append(f"lambda_fit = {report.lambda_fit:.6g}, lambda_certified = {c.lambda_certified:.6g}")
    return out


def macro_run(cfg: ExperimentConfig) -> Outcome:
    grid = grid_from(cfg)
    m = cfg["macro"]
    rho0, T0 = initial_fields(cfg, grid)
    start = ml.MacroState(rho0, T0)
    final, snaps = ml.macro_run(start, cfg["solver"]["t_final"], m["macro_dt"], cfg["solver"]["D"],
                                scheme=m["scheme"], stride=m["snapshot_stride"])
    table = DiagnosticsSeries(("time", "x", "rho", "T"))
    for s in snaps:
        for row in zip(grid.x, s.rho0, s.T0):
            table.append((float(s.time),) + tuple(float(v) for v in row))
    mass0, energy0 = start.integrals()
    mass1, energy1 = final.integrals()
    out = Outcome("macro-run")
    out.tables["macro"] = table
    out.checks += [
        at_most("mass_drift", abs(mass1 - mass0) / abs(mass0), 1e-10, "relative"),
        at_most("energy_drift", abs(energy1 - energy0) / abs(energy0), 1e-10, "relative"),
        Check("positivity", float(min(final.rho0.min(), final.T0.min())), 0.0,
              bool(final.rho0.min() > 0 and final.T0.min() > 0)),
    ]
    return out


def sweep_epsilon(cfg: ExperimentConfig) -> Outcome:
    grid = grid_from(cfg)
    m = cfg["macro"]
    base = solver_from(cfg)
    scfg = ml.EpsilonSweepConfig(tuple(m["eps_list"]), base, m["t_star"], m["relaxation_resolution"],
                                 m["macro_dt"], m["scheme"])
    rho0, T0 = initial_fields(cfg, grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = ml.epsilon_sweep(scfg, rho0, T0, grid)
    table = DiagnosticsSeries(("eps", "error", "rho_error", "T_error", "remainder_distance", "steps", "failure"))
    for e in rep.entries:
        table.append((e.eps, e.error, e.rho_error, e.T_error, e.remainder_distance, e.steps, e.failure or ""))
    out = Outcome("sweep-epsilon")
    out.tables["sweep"] = table
    out.tables["sweep_summary"] = _pairs_table({"slope": rep.slope, "monotone": float(rep.monotone)})
    failures = [e for e in rep.entries if e.failure]
    out.checks += [
        at_most("kinetic_runs_completed", len(failures), 0, "; ".join(e.failure for e in failures)),
        Check("error_strictly_decreasing", float(rep.monotone), 1.0, rep.monotone),
        at_least("fitted_slope", rep.slope if math.isfinite(rep.slope) else -math.inf, 0.9),
    ]
    out.report.append(f"fitted slope = {rep.slope:.6g}")
    return out


def green_check(cfg: ExperimentConfig) -> Outcome:
    grid = grid_from(cfg)
    h = cfg["heat"]
    D = cfg["solver"]["D"]
    p = hs.HeatKernelParams(D, h["truncation_tol"], h["image_cap"])
    x = grid.x
    out = Outcome("green-check")
    for t in h["times"]:
        G = hs.green_function(x, t, p)
        out.checks.append(at_most(f"kernel_mass_t={t:g}", abs(grid.dx * float(np.sum(G)) - 1.0), 1e-12))
        sym = float(np.max(np.abs(G - hs.green_function(-x, t, p))))
        out.checks.append(at_most(f"kernel_symmetry_t={t:g}", sym, 1e-14 * float(np.max(G))))

    t = h["t"]
    a = 4 * np.pi**2 * D
    wave = np.cos(2 * np.pi * x)
    exact = math.exp(-a * t) * wave
    err = float(np.max(np.abs(hs.mild_solve(wave, None, t, p, grid) - exact)))
    out.checks.append(at_most("oracle_match_initial", err, 1e-6, "cos data, no source, vs modal flow"))

    source = np.tile(wave, (h["n_times"], 1))
    exact_src = exact + (1 - math.exp(-a * t)) / a * wave
    err = float(np.max(np.abs(hs.mild_solve(wave, source, t, p, grid) - exact_src)))
    out.checks.append(at_most("oracle_match_source", err, 1e-6, "cos data with steady cos source"))

    T0 = 1.0 + 0.9 * wave
    pos_source = np.tile(1.0 + np.sin(2 * np.pi * x), (h["n_times"], 1))
    T = hs.mild_solve(T0, pos_source, t, p, grid)
    out.checks.append(at_least("positivity", float(T.min()), float(T0.min()) - 1e-12,
                               "min of solution vs min of data, nonnegative source"))
    observed, bound, holds = hs.supnorm_bound_check(T0, pos_source, t, p, grid)
    out.checks.append(Check("supnorm_bound", observed, bound, holds))
    return out


RUNNERS = {
    "simulate": simulate,
    "linear-spectrum": linear_spectrum,
    "linear-decay": linear_decay,
    "macro-run": macro_run,
    "sweep-epsilon": sweep_epsilon,
    "green-check": green_check,
    "constants": constants,
}


def run_subcommand(cfg: ExperimentConfig) -> Outcome:
    return RUNNERS[cfg.subcommand](cfg)


def write_outcome(outcome: Outcome, cfg: ExperimentConfig, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = cfg.resolved()
    written = []
    for name, table in {**outcome.tables, "checks": outcome.check_table()}.items():
        path = out_dir / f"{name}.csv"
        table.to_csv(path, resolved)
        written.append(path)
    manifest = out_dir / "failures.json"
    if outcome.passed:
        manifest.unlink(missing_ok=True)
    else:
        write_manifest(manifest, {
            "subcommand": outcome.subcommand,
            "status": "failed",
            "failures": [
                {"check": c.name, "value": c.value, "threshold": c.threshold, "detail": c.detail}
                for c in outcome.checks if not c.passed
            ],
            "config": resolved,
        })
        written.append(manifest)
    return written


def write_manifest(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
