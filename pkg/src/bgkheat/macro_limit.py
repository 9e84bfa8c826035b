"""Diffusive limit: the cross-diffusion system and the epsilon sweep.

Limit system for the gas density rho and background temperature T:

    d_t rho                  = 1/2 Lap(rho T)
    d_t ((rho d/2 + 1) T)    = Lap(((3d/4) rho T + D) T)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, DomainError, SolverFault
from .kinetic_solver import SimState, SolverConfig, run as kinetic_run
from .phase_space import PhaseGrid, moments, normalized_maxwellian_field, spectral_derivative


@dataclass
class MacroState:
    rho0: np.ndarray
    T0: np.ndarray
    time: float = 0.0

    def integrals(self, d: int = 1) -> tuple[float, float]:
        n = self.rho0.shape[0]
        mass = float(np.sum(self.rho0)) / n
        energy = float(np.sum((0.5 * d * self.rho0 + 1.0) * self.T0)) / n
        return mass, energy


def laplacian_matrix(nx: int) -> np.ndarray:
    """Dense spectral Laplacian on nx periodic nodes of [0, 1)."""
    k = np.fft.rfftfreq(nx, d=1.0 / nx)
    symbol = -((2.0 * np.pi * k) ** 2)
    # columns are the Laplacian of unit vectors; the operator is a symmetric circulant
    col = np.fft.irfft(symbol, n=nx)
    idx = (np.arange(nx)[:, None] - np.arange(nx)[None, :]) % nx
    return col[idx]


def _flux_coefficient(rho: np.ndarray, T: np.ndarray, D: float, d: int) -> np.ndarray:
    """c with ((3d/4) rho T + D) T = c w, w = (rho d/2 + 1) T, at frozen T."""
    return ((0.75 * d) * rho * T + D) / (0.5 * d * rho + 1.0)


def _theta_solve(u: np.ndarray, c_old: np.ndarray, c_new: np.ndarray, tau: float,
                 lap: np.ndarray, theta: float) -> np.ndarray:
    """(I - theta tau Lap c_new) u_new = u + (1 - theta) tau Lap (c_old u)."""
    n = u.shape[0]
    rhs = u if theta == 1.0 else u + (1.0 - theta) * tau * (lap @ (c_old * u))
    return np.linalg.solve(np.eye(n) - theta * tau * lap * c_new[None, :], rhs)


def cross_diffusion_step(state: MacroState, dt: float, D: float, grid: PhaseGrid | None = None,
                         d: int = 1, scheme: str = "euler", lap: np.ndarray | None = None) -> MacroState:
    """Advance the limit system by ``dt``.

    ``euler``: flux coefficients frozen at the start of the step, Laplacian
    implicit (first order). ``midpoint``: temperature taken from an Euler
    half step, then Crank-Nicolson with those frozen coefficients (second
    order). Both conserve the integrals of rho and (rho d/2 + 1) T to
    rounding because the Laplacian has zero column sums.
    """
    rho, T = state.rho0, state.T0
    if lap is None:
        lap = laplacian_matrix(rho.shape[0])
    w = (0.5 * d * rho + 1.0) * T
    if scheme == "euler":
        rho_new = _theta_solve(rho, 0.5 * T, 0.5 * T, dt, lap, 1.0)
        c = _flux_coefficient(rho_new, T, D, d)
        w_new = _theta_solve(w, c, c, dt, lap, 1.0)
    elif scheme == "midpoint":
        T_h = cross_diffusion_step(state, 0.5 * dt, D, d=d, scheme="euler", lap=lap).T0
        rho_new = _theta_solve(rho, 0.5 * T_h, 0.5 * T_h, dt, lap, 0.5)
        w_new = _theta_solve(w, _flux_coefficient(rho, T_h, D, d),
                             _flux_coefficient(rho_new, T_h, D, d), dt, lap, 0.5)
    else:
        raise ConfigurationError(f"unknown cross-diffusion scheme {scheme!r}")
    T_new = w_new / (0.5 * d * rho_new + 1.0)
    if np.any(~(rho_new > 0)) or np.any(~(T_new > 0)):
        raise SolverFault(f"cross-diffusion lost positivity at t={state.time + dt:.6g}; reduce dt (now {dt:g})")
    return MacroState(rho_new, T_new, state.time + dt)


def macro_run(initial: MacroState, t_final: float, dt: float, D: float, d: int = 1,
              scheme: str = "euler", stride: int = 0) -> tuple[MacroState, list[MacroState]]:
    """Integrate to ``t_final`` (last step shortened to land exactly)."""
    if not (t_final > 0 and dt > 0):
        raise DomainError("t_final and dt must be positive")
    lap = laplacian_matrix(initial.rho0.shape[0])
    state = MacroState(np.array(initial.rho0, float), np.array(initial.T0, float), initial.time)
    snapshots = [state]
    t_end = initial.time + t_final
    n = 0
    while state.time < t_end - 1e-14:
        h = min(dt, t_end - state.time)
        state = cross_diffusion_step(state, h, D, d=d, scheme=scheme, lap=lap)
        n += 1
        if stride and n % stride == 0:
            snapshots.append(state)
    if not snapshots or snapshots[-1] is not state:
        snapshots.append(state)
    return state, snapshots


# ---------------------------------------------------------------------------
# kinetic side


def well_prepared(rho0: np.ndarray, T0: np.ndarray, grid: PhaseGrid) -> SimState:
    """Leading-order initial data f = rho0 M(T0), no initial layer.

    Uses the unit-mass discrete Maxwellian so the initial remainder is exactly zero.
    """
    return SimState.from_fields(rho0[:, None] * normalized_maxwellian_field(T0, grid), T0, grid)


def remainder_check(state: SimState, eps: float, grid: PhaseGrid) -> tuple[float, float]:
    """Distance of R = (f - rho M(T)) / eps from R0 = -v d/dx (rho M(T)).

    Returns ``(relative L1 distance, max |int R dv|)``; the second number
    must vanish since M has unit mass. When R0 is zero the distance is absolute.
    """
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    rho, _, _ = moments(state.f, grid)
    local = rho[:, None] * normalized_maxwellian_field(state.T, grid)
    R = (state.f - local) / eps
    R0 = -grid.velocity_nodes[None, :] * spectral_derivative(local)
    mass_defect = float(np.max(np.abs(R @ grid.velocity_weights)))
    if mass_defect > 1e-10 * max(1.0, float(np.max(np.abs(R)))):
        raise SolverFault(f"remainder carries mass: {mass_defect:.3e}")
    num = grid.integrate_xv(np.abs(R - R0))
    den = grid.integrate_xv(np.abs(R0))
    if den == 0:
        # R0 vanishes (uniform state): report the absolute distance
        return num, mass_defect
    return num / den, mass_defect


def limit_flux(rho: np.ndarray, T: np.ndarray, grid: PhaseGrid) -> tuple[np.ndarray, np.ndarray]:
    """(int v R0 dv, -1/2 d/dx(rho T)): the two must agree."""
    local = rho[:, None] * normalized_maxwellian_field(T, grid)
    R0 = -grid.velocity_nodes[None, :] * spectral_derivative(local)
    quadrature = R0 @ (grid.velocity_weights * grid.velocity_nodes)
    closed = -0.5 * spectral_derivative(rho * T)
    return quadrature, closed


@dataclass(frozen=True)
class EpsilonSweepConfig:
    eps_list: tuple[float, ...] = (0.4, 0.2, 0.1, 0.05)
    base: SolverConfig = field(default_factory=SolverConfig)
    t_star: float = 0.5
    relaxation_resolution: float = 0.02
    macro_dt: float = 1e-4
    macro_scheme: str = "midpoint"

    def violations(self) -> list[str]:
        out = []
        if not self.eps_list:
            out.append("eps_list must be nonempty")
        if any(not (0 < e <= 1) for e in self.eps_list):
            out.append("every eps must lie in (0, 1]")
        if any(b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            out.append("eps_list must be strictly decreasing")
        if not self.t_star > 0:
            out.append("t_star must be positive")
        if not self.relaxation_resolution > 0:
            out.append("relaxation_resolution must be positive")
        if not self.macro_dt > 0:
            out.append("macro_dt must be positive")
        return out + self.base.violations()

    def kinetic_config(self, eps: float) -> SolverConfig:
        """Per-eps solver settings: dt resolves the eps^2 relaxation time."""
        dt = min(self.base.dt, self.relaxation_resolution * eps * eps)
        n = max(1, math.ceil(self.t_star / dt - 1e-9))
        return replace(self.base, eps=eps, dt=self.t_star / n, t_final=self.t_star,
                       diagnostics_stride=n)


@dataclass
class SweepEntry:
    eps: float
    error: float
    rho_error: float
    T_error: float
    remainder_distance: float
    steps: int
    failure: str | None = None


@dataclass
class SweepReport:
    entries: list[SweepEntry]
    slope: float
    monotone: bool
    macro: MacroState = field(repr=False, default=None)


def fit_slope(eps: np.ndarray, err: np.ndarray) -> float:
    return float(np.polyfit(np.log(eps), np.log(err), 1)[0])


def epsilon_sweep(cfg: EpsilonSweepConfig, rho0: np.ndarray, T0: np.ndarray, grid: PhaseGrid) -> SweepReport:
    problems = cfg.violations()
    if problems:
        raise ConfigurationError("; ".join(problems))
    D = cfg.base.D
    macro, _ = macro_run(MacroState(rho0.copy(), T0.copy()), cfg.t_star, cfg.macro_dt, D,
                         scheme=cfg.macro_scheme)
    entries = []
    for eps in cfg.eps_list:
        kcfg = cfg.kinetic_config(eps)
        try:
            state, _ = kinetic_run(well_prepared(rho0, T0, grid), kcfg, grid)
        except SolverFault as exc:
            entries.append(SweepEntry(eps, math.nan, math.nan, math.nan, math.nan, kcfg.n_steps, str(exc)))
            continue
        e_rho = grid.integrate_x(np.abs(state.rho - macro.rho0))
        e_T = grid.integrate_x(np.abs(state.T - macro.T0))
        dist, _ = remainder_check(state, eps, grid)
        entries.append(SweepEntry(eps, e_rho + e_T, e_rho, e_T, dist, kcfg.n_steps))
    ok = [e for e in entries if e.failure is None and e.error > 0]
    slope = fit_slope(np.array([e.eps for e in ok]), np.array([e.error for e in ok])) if len(ok) >= 2 else math.nan
    errs = [e.error for e in entries]
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    return SweepReport(entries, slope, monotone, macro)
