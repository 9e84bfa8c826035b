"""Heat kernel on the unit torus and the mild (Duhamel) heat solution.

This is an independent physical-space route to the heat flow: convolution
with the wrapped Gaussian instead of modal multipliers. It is used to
cross-check the spectral diffusion substep of the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DomainError
from .phase_space import PhaseGrid

# the sampled kernel is trusted once its width covers this many grid cells
_RESOLVED_WIDTHS = 3.0


@dataclass(frozen=True)
class HeatKernelParams:
    D: float = 1.0
    truncation_tol: float = 1e-15
    image_cap: int = 64

    def __post_init__(self):
        if not self.D > 0:
            raise DomainError(f"D must be positive, got {self.D}")
        if not 0 < self.truncation_tol < 1e-8:
            raise DomainError(f"truncation_tol must lie in (0, 1e-8), got {self.truncation_tol}")
        if self.image_cap < 1:
            raise DomainError("image_cap must be >= 1")


def green_function(x, t: float, p: HeatKernelParams = HeatKernelParams()):
    """G(x, t) = (4 pi D t)^(-1/2) sum_k exp(-(x + k)^2 / (4 D t)).

    Images are added in symmetric pairs k, -k until a pair falls below
    ``truncation_tol`` times the partial sum or ``image_cap`` is reached.
    """
    if not t > 0:
        raise DomainError(f"heat kernel needs t > 0, got {t}")
    x = np.asarray(x, dtype=float)
    scale = 4.0 * p.D * t
    total = np.exp(-(x**2) / scale)
    for k in range(1, p.image_cap + 1):
        pair = np.exp(-((x + k) ** 2) / scale) + np.exp(-((x - k) ** 2) / scale)
        total = total + pair
        if np.all(pair <= p.truncation_tol * total):
            break
    out = total / math.sqrt(math.pi * scale)
    return float(out) if out.ndim == 0 else out


def kernel_constant(tau: float, p: HeatKernelParams = HeatKernelParams(), samples: int = 400) -> float:
    """Empirical c_tau with G(x, s) <= c_tau / sqrt(s) for 0 < s <= tau.

    The sup over x is attained at x = 0; s is scanned on a log grid.
    """
    s = np.geomspace(min(1e-8, tau), tau, samples)
    return float(max(math.sqrt(si) * green_function(0.0, si, p) for si in s))


def _fd_semigroup(h: np.ndarray, a: float, dx: float) -> np.ndarray:
    """exp(a Lap_h) h for the three-point Laplacian, applied through its circulant symbol.

    Positive (the generator has nonnegative off-diagonals), mass preserving
    and stable for any a, unlike a truncated Taylor series.
    """
    n = h.shape[-1]
    k = np.fft.rfftfreq(n, d=1.0 / n)
    symbol = -4.0 * np.sin(np.pi * k / n) ** 2 / dx**2
    return np.fft.irfft(np.fft.rfft(h) * np.exp(a * symbol), n=n)


class _Convolver:
    """Applies y -> int G(x - y, tau) h(y) dy on the periodic grid."""

    def __init__(self, grid: PhaseGrid, p: HeatKernelParams):
        self.grid = grid
        self.p = p
        n = grid.nx
        idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
        self._offsets = idx / n
        self._cache: dict[float, np.ndarray] = {}

    def __call__(self, tau: float, h: np.ndarray) -> np.ndarray:
        dx = self.grid.dx
        if math.sqrt(2.0 * self.p.D * tau) < _RESOLVED_WIDTHS * dx:
            # kernel narrower than a few cells: use the discrete heat semigroup instead
            return _fd_semigroup(h, self.p.D * tau, dx)
        mat = self._cache.get(tau)
        if mat is None:
            mat = green_function(self._offsets, tau, self.p) * dx
            # unit mass per row is the continuum identity int G = 1
            mat /= mat.sum(axis=1, keepdims=True)
            if len(self._cache) < 4096:
                self._cache[tau] = mat
        return mat @ h


def mild_solve(
    T0: np.ndarray,
    source: np.ndarray | None,
    t: float,
    p: HeatKernelParams,
    grid: PhaseGrid,
    order: int = 6,
) -> np.ndarray:
    """Mild solution of dT/dt = D T'' + h at time ``t``.

    ``source`` has shape (n_times, nx): samples of h on the uniform mesh
    linspace(0, t, n_times); None means h = 0. The Duhamel integral is taken
    panel by panel with Gauss-Legendre nodes and linear interpolation of h in
    time. On the last panel the substitution t - s = u^2 removes the
    1/sqrt(t - s) kernel singularity.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    T0 = np.asarray(T0, dtype=float)
    if T0.shape != (grid.nx,):
        raise ContractViolation(f"T0 has shape {T0.shape}, expected ({grid.nx},)")
    conv = _Convolver(grid, p)
    out = conv(t, T0)
    if source is None:
        return out
    h = np.asarray(source, dtype=float)
    if h.ndim != 2 or h.shape[1] != grid.nx or h.shape[0] < 2:
        raise ContractViolation(f"source must have shape (n_times >= 2, {grid.nx}), got {h.shape}")
    mesh = np.linspace(0.0, t, h.shape[0])
    nodes, weights = np.polynomial.legendre.leggauss(order)

    def h_at(s: float) -> np.ndarray:
        i = min(int(s / t * (len(mesh) - 1)), len(mesh) - 2)
        lam = (s - mesh[i]) / (mesh[i + 1] - mesh[i])
        return (1.0 - lam) * h[i] + lam * h[i + 1]

    duhamel = np.zeros(grid.nx)
    for i in range(len(mesh) - 2):
        a, b = mesh[i], mesh[i + 1]
        half = 0.5 * (b - a)
        for xi, wi in zip(nodes, weights):
            s = a + half * (xi + 1.0)
            duhamel += half * wi * conv(t - s, h_at(s))
    # last panel: s = t - u^2, ds = 2u du, u in [0, sqrt(t - a)]
    a = mesh[-2]
    umax = math.sqrt(t - a)
    half = 0.5 * umax
    for xi, wi in zip(nodes, weights):
        u = half * (xi + 1.0)
        duhamel += half * wi * 2.0 * u * conv(u * u, h_at(t - u * u))
    return out + duhamel


def supnorm_bound_check(
    T0: np.ndarray,
    source: np.ndarray | None,
    t: float,
    p: HeatKernelParams,
    grid: PhaseGrid,
) -> tuple[float, float, bool]:
    """Compare sup|T(t)| with ||T0||_inf + 2 sqrt(t) c_t ||h||_{L^inf L^1}.

    Returns ``(observed, bound, holds)``. The source must be nonnegative.
    """
    if source is not None and np.any(np.asarray(source) < 0):
        raise DomainError("the sup-norm bound is stated for nonnegative sources")
    T = mild_solve(T0, source, t, p, grid)
    observed = float(np.max(np.abs(T)))
    bound = float(np.max(np.abs(T0)))
    if source is not None:
        h_norm = float(np.max(np.sum(np.abs(source), axis=1) * grid.dx))
        bound += 2.0 * math.sqrt(t) * kernel_constant(t, p) * h_norm
    return observed, bound, observed <= bound * (1.0 + 1e-12) + 1e-14
