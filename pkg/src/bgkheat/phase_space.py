"""Grids, velocity quadrature, the Maxwellian and velocity moments.

The Maxwellian convention throughout is

    M(T)(v) = (pi T)^(-d/2) exp(-|v|^2 / T),

so that the kinetic energy per unit density is d T / 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractViolation, DomainError


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid on the unit torus times a truncated velocity interval."""

    nx: int
    nv: int
    v_max: float
    d: int = 1
    x: np.ndarray = field(init=False, repr=False, compare=False)
    velocity_nodes: np.ndarray = field(init=False, repr=False, compare=False)
    velocity_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.arange(self.nx) / self.nx
        v = np.linspace(-self.v_max, self.v_max, self.nv)
        # exact symmetry, linspace can be off by an ulp
        v = 0.5 * (v - v[::-1])
        dv = 2.0 * self.v_max / (self.nv - 1)
        w = np.full(self.nv, dv)
        w[0] = w[-1] = 0.5 * dv
        for name, arr in (("x", x), ("velocity_nodes", v), ("velocity_weights", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dx(self) -> float:
        return 1.0 / self.nx

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / (self.nv - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.nv)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers of ``np.fft.rfft`` along x."""
        return np.arange(self.nx // 2 + 1)

    def integrate_x(self, values: np.ndarray) -> float:
        """Integral over the unit torus (rectangle rule, exact for trig polynomials)."""
        return float(np.sum(values) * self.dx)

    def integrate_xv(self, values: np.ndarray) -> float:
        return float(np.sum(values @ self.velocity_weights) * self.dx)


def build_grid(nx: int, nv: int, v_max: float, d: int = 1) -> PhaseGrid:
    problems = []
    if not isinstance(nx, (int, np.integer)) or nx < 4 or nx % 2:
        problems.append(f"nx must be an even integer >= 4, got {nx!r}")
    if not isinstance(nv, (int, np.integer)) or nv < 8 or nv % 2 == 0:
        problems.append(f"nv must be an odd integer >= 8, got {nv!r}")
    if not np.isfinite(v_max) or v_max <= 0:
        problems.append(f"v_max must be positive, got {v_max!r}")
    if d != 1:
        problems.append(f"gridded computations support d = 1 only, got d={d!r}")
    if problems:
        raise ConfigurationError("; ".join(problems))
    return PhaseGrid(int(nx), int(nv), float(v_max), int(d))


def default_v_max(T_cap: float) -> float:
    """Velocity truncation that puts the Maxwellian tail of M(T_cap) below 1e-13."""
    return 8.0 * np.sqrt(T_cap)


def maxwellian(T: float, grid: PhaseGrid, d: int | None = None) -> np.ndarray:
    """Sample M(T) at the velocity nodes."""
    if d is None:
        d = grid.d
    if not np.isfinite(T) or T <= 0:
        raise DomainError(f"Maxwellian needs T > 0, got {T!r}")
    v = grid.velocity_nodes
    return (np.pi * T) ** (-0.5 * d) * np.exp(-(v**2) / T)


def maxwellian_field(T: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """M(T(x))(v) on the full grid, shape (nx, nv)."""
    T = np.asarray(T, dtype=float)
    if np.any(~np.isfinite(T)) or np.any(T <= 0):
        raise DomainError("Maxwellian needs T > 0 at every node")
    v2 = grid.velocity_nodes[None, :] ** 2
    return (np.pi * T[:, None]) ** -0.5 * np.exp(-v2 / T[:, None])


def normalized_maxwellian_field(T: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """M(T(x)) rescaled so that its discrete velocity mass is exactly one.

    The solver relaxes towards this version, which makes the relaxation
    substep conserve mass to rounding.
    """
    M = maxwellian_field(T, grid)
    return M / (M @ grid.velocity_weights)[:, None]


def moments(f: np.ndarray, grid: PhaseGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Density, momentum and energy density ``(rho, j, E)`` per spatial node."""
    f = np.asarray(f)
    if f.shape != grid.shape:
        raise ContractViolation(f"f has shape {f.shape}, grid expects {grid.shape}")
    v = grid.velocity_nodes
    w = grid.velocity_weights
    rho = f @ w
    # pair node j with its mirror so even data cancels exactly
    mid = grid.nv // 2
    momentum = (f[:, mid + 1:] - f[:, mid - 1::-1]) @ (w * v)[mid + 1:]
    energy = f @ (w * v * v)
    return rho, momentum, energy


def spectral_derivative(u: np.ndarray, order: int = 1) -> np.ndarray:
    """Spectral x-derivative of periodic samples on [0, 1), along the first axis."""
    n = u.shape[0]
    k = np.fft.rfftfreq(n, d=1.0 / n)
    mult = (2j * np.pi * k) ** order
    if order % 2 == 1:
        # odd derivatives of the Nyquist mode are not representable on real data
        mult[-1] = 0.0
    shape = (-1,) + (1,) * (u.ndim - 1)
    return np.fft.irfft(np.fft.rfft(u, axis=0) * mult.reshape(shape), n=n, axis=0)
