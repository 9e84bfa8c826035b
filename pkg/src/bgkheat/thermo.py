"""Entropy, relative entropy, entropy dissipation and the global equilibrium."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .phase_space import PhaseGrid, moments, normalized_maxwellian_field, spectral_derivative

# f below this contributes nothing to f log f (continuous extension of 0 log 0)
VACUUM = 1e-300


@dataclass(frozen=True)
class EquilibriumParams:
    rho_inf: float
    T_inf: float
    d: int = 1

    def __post_init__(self):
        if not (self.rho_inf > 0 and self.T_inf > 0):
            raise DomainError(f"equilibrium constants must be positive: {self}")

    def distribution(self, grid: PhaseGrid) -> np.ndarray:
        """f_inf = rho_inf M(T_inf) on the velocity nodes (discrete mass rho_inf)."""
        M = normalized_maxwellian_field(np.array([self.T_inf]), grid)[0]
        return self.rho_inf * M


@dataclass(frozen=True)
class EntropyReport:
    H: float
    H_rel: float
    dissipation_kinetic: float
    dissipation_heat: float


class Dissipation(NamedTuple):
    kinetic: float
    heat: float
    skipped_nodes: int


def _check_temperature(T: np.ndarray) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if np.any(~(T > 0)):
        raise DomainError("entropy functionals need T > 0 everywhere")
    return T


def _xlogy_safe(f: np.ndarray, g: np.ndarray | None = None) -> np.ndarray:
    """f log(f / g) with f <= VACUUM contributing zero (g defaults to 1)."""
    out = np.zeros_like(f, dtype=float)
    mask = f > VACUUM
    if g is not None:
        mask &= g > VACUUM
    if g is None:
        out[mask] = f[mask] * np.log(f[mask])
    else:
        out[mask] = f[mask] * (np.log(f[mask]) - np.log(g[mask]))
    return out


def equilibrium(f0: np.ndarray, T0: np.ndarray, grid: PhaseGrid, d: int | None = None) -> EquilibriumParams:
    """Constants (rho_inf, T_inf) fixed by total gas mass and total energy on |Omega| = 1."""
    d = grid.d if d is None else d
    rho, _, E = moments(f0, grid)
    mass = grid.integrate_x(rho)
    if not mass > 0:
        raise DomainError(f"initial gas mass must be positive, got {mass}")
    total_energy = grid.integrate_x(E + np.asarray(T0, dtype=float))
    T_inf = total_energy / (0.5 * d * mass + 1.0)
    if not T_inf > 0:
        raise DomainError(f"inadmissible data: equilibrium temperature {T_inf} <= 0")
    return EquilibriumParams(mass, T_inf, d)


def entropy(f: np.ndarray, T: np.ndarray, grid: PhaseGrid) -> float:
    T = _check_temperature(T)
    gibbs = _xlogy_safe(np.asarray(f, dtype=float)) @ grid.velocity_weights
    return grid.integrate_x(gibbs - np.log(T))


def relative_entropy(f: np.ndarray, T: np.ndarray, eq: EquilibriumParams, grid: PhaseGrid) -> float:
    T = _check_temperature(T)
    f = np.asarray(f, dtype=float)
    f_inf = np.broadcast_to(eq.distribution(grid), f.shape)
    gibbs = _xlogy_safe(f, f_inf) @ grid.velocity_weights
    u = T / eq.T_inf
    value = grid.integrate_x(gibbs - np.log(u) + u - 1.0)
    if value < -1e-12:
        raise DomainError(f"relative entropy {value} < 0: state is off the conserved orbit")
    return value


def dissipation(f: np.ndarray, T: np.ndarray, grid: PhaseGrid, D: float) -> Dissipation:
    """Both entropy dissipation terms, each reported as a nonnegative number.

    dH/dt = -(kinetic + heat). The temperature gradient is spectral, matching
    the solver's diffusion substep.
    """
    T = _check_temperature(T)
    f = np.asarray(f, dtype=float)
    rho, _, _ = moments(f, grid)
    local_eq = rho[:, None] * normalized_maxwellian_field(T, grid)
    # vacuum nodes (rho = 0) carry no relaxation and are skipped with a flag
    skipped = int(np.count_nonzero(~(rho > VACUUM)))
    ok = (f > VACUUM) & (local_eq > VACUUM)
    integrand = np.zeros_like(f)
    integrand[ok] = (f[ok] - local_eq[ok]) * (np.log(f[ok]) - np.log(local_eq[ok]))
    kinetic = grid.integrate_xv(integrand)
    dT = spectral_derivative(T)
    heat = D * grid.integrate_x(dT**2 / T**2)
    return Dissipation(kinetic, heat, skipped)


def entropy_report(f, T, eq: EquilibriumParams, grid: PhaseGrid, D: float) -> EntropyReport:
    diss = dissipation(f, T, grid, D)
    return EntropyReport(
        H=entropy(f, T, grid),
        H_rel=relative_entropy(f, T, eq, grid),
        dissipation_kinetic=diss.kinetic,
        dissipation_heat=diss.heat,
    )
