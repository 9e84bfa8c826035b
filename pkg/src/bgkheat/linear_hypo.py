"""Linearization around the global equilibrium and hypocoercive decay.

State space: pairs F = (fhat, That) with the weighted inner product

    <F, G> = int ( int fhat ghat / f_inf dv + That theta / T_inf^2 ) dx.

Per spatial Fourier mode k the linear generator is a dense (nv+1)x(nv+1)
matrix acting on (fhat at the velocity nodes, That). Conjugating it with the
square root of the metric weights gives a matrix whose collision part is
Hermitian and whose transport part is skew-Hermitian; all spectral work is
done in those coordinates.

The discrete Maxwellian has unit quadrature mass and the energy shape
function uses the discrete second moment, so mass conservation of the
linearized collision operator and of the exchange with the background hold
to rounding rather than to quadrature accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from .errors import AnalysisError, DomainError
from .kinetic_solver import SimState, SolverConfig, split_step
from .phase_space import PhaseGrid, normalized_maxwellian_field
from .thermo import EquilibriumParams

POINCARE_UNIT_TORUS = (2.0 * np.pi) ** 2
# velocity nodes with f_inf below this are dropped from the weighted metric
TAIL_CUTOFF = 1e-280


@dataclass(frozen=True)
class LinearModel:
    """Discrete equilibrium data shared by every linear computation."""

    eq: EquilibriumParams
    grid: PhaseGrid
    keep: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    f_inf: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    second_moment: float = 0.0

    @classmethod
    def build(cls, eq: EquilibriumParams, grid: PhaseGrid) -> "LinearModel":
        M = normalized_maxwellian_field(np.array([eq.T_inf]), grid)[0]
        keep = eq.rho_inf * M >= TAIL_CUTOFF
        M = np.where(keep, M, 0.0)
        M = M / (M @ grid.velocity_weights)
        f_inf = eq.rho_inf * M
        v2 = grid.velocity_nodes**2
        m2 = float(M @ (grid.velocity_weights * v2))
        # (|v|^2/T_inf - d/2) with d/2 replaced by the discrete moment m2/T_inf
        phi = np.where(keep, v2 / eq.T_inf - m2 / eq.T_inf, 0.0)
        return cls(eq, grid, keep, M, f_inf, phi, m2)

    @property
    def w(self) -> np.ndarray:
        return self.grid.velocity_weights[self.keep]

    @property
    def v(self) -> np.ndarray:
        return self.grid.velocity_nodes[self.keep]

    def metric(self) -> np.ndarray:
        """Diagonal of the weighted metric on (kept velocity nodes, That)."""
        return np.concatenate([self.w / self.f_inf[self.keep], [1.0 / self.eq.T_inf**2]])

    def pi_direction(self) -> np.ndarray:
        """Unit vector spanning the local-equilibrium kernel, symmetrized coordinates."""
        return np.concatenate([np.sqrt(self.w * self.M[self.keep]), [0.0]])


def q_linear(fhat_v: np.ndarray, that, eq: EquilibriumParams, grid: PhaseGrid, model: LinearModel | None = None):
    """Linearized collision operator Q_L at one location, or row-wise for fields.

    ``fhat_v`` may be (nv,) with scalar ``that`` or (nx, nv) with ``that`` of shape (nx,).
    """
    model = model or LinearModel.build(eq, grid)
    fhat_v = np.asarray(fhat_v, dtype=float)
    that = np.asarray(that, dtype=float)
    rho_hat = fhat_v @ grid.velocity_weights
    return (
        np.multiply.outer(rho_hat, model.M)
        + np.multiply.outer(that / eq.T_inf, model.f_inf * model.phi)
        - fhat_v
    )


@dataclass
class PerturbationState:
    fhat: np.ndarray
    That: np.ndarray
    eq: EquilibriumParams

    def conservation_residuals(self, grid: PhaseGrid) -> tuple[float, float]:
        v2w = grid.velocity_weights * grid.velocity_nodes**2
        mass = grid.integrate_x(self.fhat @ grid.velocity_weights)
        energy = grid.integrate_x(self.fhat @ v2w + self.That)
        return mass, energy

    def check_admissible(self, grid: PhaseGrid, tol: float = 1e-10) -> "PerturbationState":
        mass, energy = self.conservation_residuals(grid)
        scale = max(1.0, float(np.max(np.abs(self.fhat))), float(np.max(np.abs(self.That))))
        if abs(mass) > tol * scale or abs(energy) > tol * scale:
            raise DomainError(
                f"perturbation violates the zero-mass/zero-energy constraints "
                f"(mass {mass:.3e}, energy {energy:.3e})"
            )
        return self


def inner(F: PerturbationState, G: PerturbationState, grid: PhaseGrid, model: LinearModel | None = None) -> float:
    model = model or LinearModel.build(F.eq, grid)
    keep = model.keep
    wf = grid.velocity_weights[keep] / model.f_inf[keep]
    kinetic = (F.fhat[:, keep] * G.fhat[:, keep]) @ wf
    return grid.integrate_x(kinetic + F.That * G.That / F.eq.T_inf**2)


def norm_sq(F: PerturbationState, grid: PhaseGrid, model: LinearModel | None = None) -> float:
    return inner(F, F, grid, model)


def quadratic_entropy(F: PerturbationState, grid: PhaseGrid, model: LinearModel | None = None) -> float:
    """H_L = int ( int fhat^2 / (2 f_inf) + That^2 / (2 T_inf^2) ), i.e. half the squared norm."""
    return 0.5 * norm_sq(F, grid, model)


def project_pi(state: PerturbationState, grid: PhaseGrid, model: LinearModel | None = None) -> PerturbationState:
    """Orthogonal projection onto local equilibria: (rho_hat M(T_inf), 0)."""
    model = model or LinearModel.build(state.eq, grid)
    rho_hat = state.fhat @ grid.velocity_weights
    return PerturbationState(np.outer(rho_hat, model.M), np.zeros_like(state.That), state.eq)


def transport_generator(state: PerturbationState, grid: PhaseGrid) -> PerturbationState:
    """T F = (v d/dx fhat, 0), spectral in x."""
    from .phase_space import spectral_derivative

    return PerturbationState(
        spectral_derivative(state.fhat) * grid.velocity_nodes[None, :],
        np.zeros_like(state.That),
        state.eq,
    )


def collision_generator(state: PerturbationState, grid: PhaseGrid, D: float, model: LinearModel | None = None):
    """L F = (Q_L(F), D That'' - int |v|^2 Q_L(F) dv)."""
    from .phase_space import spectral_derivative

    model = model or LinearModel.build(state.eq, grid)
    q = q_linear(state.fhat, state.That, state.eq, grid, model)
    v2w = grid.velocity_weights * grid.velocity_nodes**2
    heat = D * spectral_derivative(state.That, order=2) - q @ v2w
    return PerturbationState(q, heat, state.eq)


# ---------------------------------------------------------------------------
# per-mode dense operators


@dataclass
class ModeOperator:
    """Linear generator d/dt y = (L - T) y for one Fourier mode.

    ``L`` and ``T`` act on raw coefficients y = (fhat at kept nodes, That);
    ``weights`` is the diagonal of the metric in those coordinates.
    """

    k: int
    L: np.ndarray
    T: np.ndarray
    weights: np.ndarray
    model: LinearModel = field(repr=False)

    @property
    def matrix(self) -> np.ndarray:
        return self.L - self.T

    def symmetrized(self, A: np.ndarray) -> np.ndarray:
        """S A S^-1 with S = sqrt(weights); adjoints become conjugate transposes."""
        s = np.sqrt(self.weights)
        return A * s[:, None] / s[None, :]

    @property
    def L_sym(self) -> np.ndarray:
        return self.symmetrized(self.L)

    @property
    def T_sym(self) -> np.ndarray:
        return self.symmetrized(self.T)

    @property
    def generator_sym(self) -> np.ndarray:
        return self.symmetrized(self.matrix)

    def conserved_functionals(self) -> np.ndarray:
        """Rows: total mass and total energy (gas kinetic + background), raw coordinates."""
        w, v = self.model.w, self.model.v
        mass = np.concatenate([w, [0.0]])
        energy = np.concatenate([w * v**2, [1.0]])
        return np.vstack([mass, energy])

    def constraint_basis(self) -> np.ndarray:
        """Orthonormal basis (symmetrized coordinates) of the admissible subspace."""
        if self.k != 0:
            return np.eye(self.L.shape[0])
        rows = self.conserved_functionals() / np.sqrt(self.weights)[None, :]
        return sla.null_space(rows)

    def symmetry_residual(self) -> float:
        Ls = self.L_sym
        return float(np.linalg.norm(Ls - Ls.conj().T) / np.linalg.norm(Ls))

    def antisymmetry_residual(self) -> float:
        Ts = self.T_sym
        nrm = np.linalg.norm(Ts)
        if nrm == 0:
            return 0.0
        return float(np.linalg.norm(Ts + Ts.conj().T) / nrm)


def build_mode_operator(k: int, eq: EquilibriumParams, grid: PhaseGrid, D: float,
                        model: LinearModel | None = None) -> ModeOperator:
    if abs(k) > grid.nx // 2:
        raise DomainError(f"|k| = {abs(k)} exceeds nx/2 = {grid.nx // 2}")
    model = model or LinearModel.build(eq, grid)
    keep = model.keep
    w, v = model.w, model.v
    M = model.M[keep]
    g1 = (model.f_inf * model.phi)[keep] / eq.T_inf
    n = w.size
    L = np.zeros((n + 1, n + 1))
    L[:n, :n] = np.outer(M, w) - np.eye(n)
    L[:n, n] = g1
    v2w = w * v**2
    L[n, :n] = -(v2w @ L[:n, :n])
    L[n, n] = -D * (2.0 * np.pi * k) ** 2 - v2w @ L[:n, n]
    T = np.zeros((n + 1, n + 1), dtype=complex)
    T[np.arange(n), np.arange(n)] = 2j * np.pi * k * v
    return ModeOperator(int(k), L.astype(complex), T, model.metric(), model)


def _eigvals(A: np.ndarray, hermitian: bool = False) -> np.ndarray:
    try:
        return sla.eigvalsh(A) if hermitian else sla.eigvals(A)
    except (sla.LinAlgError, ValueError) as exc:
        cond = np.linalg.cond(A)
        raise AnalysisError(f"eigensolver failed (condition number {cond:.3e}): {exc}") from exc


def spectral_abscissa(op: ModeOperator, constrained: bool = True) -> float:
    """Largest real part of the spectrum of the mode generator.

    With ``constrained`` and k = 0 the generator is restricted to the
    subspace where total mass and total energy perturbations vanish.
    """
    G = op.generator_sym
    if not np.all(np.isfinite(G)):
        raise AnalysisError(f"non-finite entries in mode operator k={op.k}")
    if constrained and op.k == 0:
        Q = op.constraint_basis()
        G = Q.conj().T @ G @ Q
    return float(np.max(_eigvals(G).real))


def micro_coercivity(op: ModeOperator) -> float:
    """Smallest eigenvalue of -L on the complement of the local-equilibrium kernel.

    This is the best constant in -<LF,F> >= c ||(1 - Pi) F||^2 for the mode.
    """
    Q = op.constraint_basis()
    p = op.model.pi_direction()
    # remove the Pi direction from the admissible basis
    pq = Q.conj().T @ p
    if np.linalg.norm(pq) > 1e-12:
        Q = Q @ sla.null_space(pq[None, :].conj())
    block = -(Q.conj().T @ op.L_sym @ Q)
    return float(np.min(_eigvals(0.5 * (block + block.conj().T), hermitian=True)))


@dataclass(frozen=True)
class HypoConstants:
    lambda_m: float
    lambda_M: float
    C_M: float
    c_P: float
    delta_star: float
    kappa: float
    lambda_certified: float

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def macro_coercivity_constant(T_inf: float, c_P: float = POINCARE_UNIT_TORUS) -> float:
    return c_P * T_inf / 2.0


def auxiliary_bound_constant(rho_inf: float, d: int) -> float:
    return math.sqrt(d * (d + 2) * rho_inf) + math.sqrt(d * rho_inf * max(1.0, rho_inf * d / 2.0))


def lyapunov_rate(lambda_m: float, lambda_M: float, C_M: float) -> tuple[float, float, float]:
    """Best (delta, kappa, rate) supported by the quadratic-form decay estimate.

    For fixed delta the largest admissible kappa is the smallest eigenvalue of
    [[lambda_m - delta, -delta C_M / 2], [-delta C_M / 2, delta mu]] with
    mu = lambda_M / (1 + lambda_M); delta is then chosen to maximize kappa.
    The resulting rate for the modified entropy is 2 kappa / (1 + delta).
    """
    if not lambda_m > 0:
        raise AnalysisError(f"microscopic coercivity constant must be positive, got {lambda_m}")
    mu = lambda_M / (1.0 + lambda_M)

    def kappa(delta: float) -> float:
        a, b, c = lambda_m - delta, -0.5 * delta * C_M, delta * mu
        return 0.5 * (a + c) - math.sqrt(0.25 * (a - c) ** 2 + b * b)

    upper = min(1.0, lambda_m)
    res = minimize_scalar(lambda d: -kappa(d), bounds=(0.0, upper), method="bounded",
                          options={"xatol": 1e-12})
    delta = float(res.x)
    kap = kappa(delta)
    if not (0 < delta < upper and kap > 0):
        raise AnalysisError(f"no admissible delta found (delta={delta}, kappa={kap})")
    return delta, kap, 2.0 * kap / (1.0 + delta)


def compute_constants(eq: EquilibriumParams, grid: PhaseGrid, D: float, d: int | None = None) -> HypoConstants:
    """Hypocoercivity constants and the certified decay rate.

    lambda_M and C_M are closed-form; lambda_m is the minimum over all
    resolved Fourier modes of the discrete microscopic coercivity constant.
    """
    d = eq.d if d is None else d
    model = LinearModel.build(eq, grid)
    c_P = POINCARE_UNIT_TORUS
    lam_M = macro_coercivity_constant(eq.T_inf, c_P)
    C_M = auxiliary_bound_constant(eq.rho_inf, d)
    lam_m = min(micro_coercivity(build_mode_operator(k, eq, grid, D, model))
                for k in range(grid.nx // 2 + 1))
    delta, kap, rate = lyapunov_rate(lam_m, lam_M, C_M)
    return HypoConstants(lam_m, lam_M, C_M, c_P, delta, kap, rate)


def spectrum_sweep(eq: EquilibriumParams, grid: PhaseGrid, D: float, k_max: int | None = None) -> dict[int, float]:
    """Constrained spectral abscissa for k = 0..k_max."""
    model = LinearModel.build(eq, grid)
    k_max = grid.nx // 2 if k_max is None else k_max
    return {k: spectral_abscissa(build_mode_operator(k, eq, grid, D, model), constrained=True)
            for k in range(k_max + 1)}


def mode_operator_norms(op: ModeOperator) -> dict[str, float]:
    """Operator norms of A, T A and Pi T Pi for one mode, weighted metric.

    A = (1 + (T Pi)^* T Pi)^-1 (T Pi)^* is assembled densely here; the
    physical-space version used by ``modified_entropy`` is independent.
    """
    n = op.L.shape[0]
    p = op.model.pi_direction()
    Pi = np.outer(p, p).astype(complex)
    Ts = op.T_sym
    TPi = Ts @ Pi
    A = np.linalg.solve(np.eye(n) + TPi.conj().T @ TPi, TPi.conj().T)
    return {
        "A": float(np.linalg.norm(A, 2)),
        "TA": float(np.linalg.norm(Ts @ A, 2)),
        "PiTPi": float(np.linalg.norm(Pi @ Ts @ Pi, 2)),
    }


# ---------------------------------------------------------------------------
# time evolution and the modified entropy


def modified_entropy(state: PerturbationState, delta: float, eq: EquilibriumParams, grid: PhaseGrid,
                     model: LinearModel | None = None) -> float:
    """1/2 ||F||^2 + delta <A F, F>.

    A F = (u M(T_inf), 0) where u - m2 u'' = -j', j the momentum of fhat and
    m2 the second velocity moment of M(T_inf); solved per Fourier mode.
    """
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    model = model or LinearModel.build(eq, grid)
    return 0.5 * norm_sq(state, grid, model) + delta * a_pairing(state, grid, model)


def a_pairing(state: PerturbationState, grid: PhaseGrid, model: LinearModel) -> float:
    """<A F, F> in the weighted metric."""
    n = grid.nx
    j = state.fhat @ (grid.velocity_weights * grid.velocity_nodes)
    rho_hat = state.fhat @ grid.velocity_weights
    k = np.fft.rfftfreq(n, d=1.0 / n)
    kk = 2.0 * np.pi * k
    mult = -1j * kk / (1.0 + model.second_moment * kk**2)
    mult[-1] = 0.0
    u = np.fft.irfft(np.fft.rfft(j) * mult, n=n)
    return grid.integrate_x(u * rho_hat) / state.eq.rho_inf


def linear_exchange_step(model: LinearModel):
    """Relaxation substep for the linear system, energy handed to That exactly."""
    grid = model.grid
    v2w = grid.velocity_weights * grid.velocity_nodes**2
    g1 = model.f_inf * model.phi / model.eq.T_inf

    def exchange(state: SimState, dt: float, grid_: PhaseGrid, cfg: SolverConfig) -> SimState:
        rate = dt / cfg.eps**2
        decay, gain = math.exp(-rate), -math.expm1(-rate)
        fhat, That = state.f, state.T
        rho_hat = fhat @ grid.velocity_weights
        target = np.outer(rho_hat, model.M) + np.outer(That, g1)
        f_new = decay * fhat + gain * target
        T_new = That - (f_new @ v2w - fhat @ v2w)
        return SimState(f_new, T_new, state.time, state.rho, state.energy)

    return exchange


@dataclass
class DecayReport:
    times: np.ndarray
    H_L: np.ndarray
    modified: np.ndarray | None
    lambda_fit: float
    C_measured: float | None = None
    final: PerturbationState | None = field(default=None, repr=False)


def fit_rate(times: np.ndarray, values: np.ndarray) -> float:
    """Least-squares decay rate of log(values) over the tail half of the series."""
    half = len(times) // 2
    t, y = times[half:], np.log(values[half:])
    slope = np.polyfit(t, y, 1)[0]
    return float(-slope)


def run_linear(initial: PerturbationState, cfg: SolverConfig, grid: PhaseGrid,
               delta: float | None = None, lambda_certified: float | None = None) -> DecayReport:
    """Evolve the linearized system with the solver's splitting and record H_L."""
    eq = initial.eq
    initial.check_admissible(grid)
    cfg.validate()
    model = LinearModel.build(eq, grid)
    exchange = linear_exchange_step(model)
    state = SimState.from_fields(initial.fhat, initial.That, grid)
    times, HL, modified = [0.0], [quadratic_entropy(initial, grid, model)], []
    if delta is not None:
        modified.append(modified_entropy(initial, delta, eq, grid, model))
    for n in range(1, cfg.n_steps + 1):
        state = split_step(state, cfg, grid, exchange)
        state.time = n * cfg.dt
        if n % cfg.diagnostics_stride == 0 or n == cfg.n_steps:
            F = PerturbationState(state.f, state.T, eq)
            times.append(state.time)
            HL.append(quadratic_entropy(F, grid, model))
            if delta is not None:
                modified.append(modified_entropy(F, delta, eq, grid, model))
    times_a, HL_a = np.array(times), np.array(HL)
    lam = fit_rate(times_a, HL_a)
    C = None
    if lambda_certified is not None:
        C = float(np.max(HL_a * np.exp(lambda_certified * times_a)) / HL_a[0])
    return DecayReport(times_a, HL_a, np.array(modified) if delta is not None else None, lam, C,
                       PerturbationState(state.f, state.T, eq))


def pi_mode_perturbation(eq: EquilibriumParams, grid: PhaseGrid, amplitude: float = 1.0, k: int = 1):
    """Pure density perturbation (amplitude cos(2 pi k x) M(T_inf), 0); zero dissipation at t = 0."""
    model = LinearModel.build(eq, grid)
    rho_hat = amplitude * np.cos(2.0 * np.pi * k * grid.x)
    return PerturbationState(np.outer(rho_hat, model.M), np.zeros(grid.nx), eq)


def random_admissible_perturbation(eq: EquilibriumParams, grid: PhaseGrid, rng: np.random.Generator,
                                   modes: int = 3, amplitude: float = 1.0) -> PerturbationState:
    """Smooth random state satisfying the zero-mass and zero-energy constraints.

    Nonzero Fourier modes 1..modes carry velocity profiles (a + b v + c v^2) M;
    the spatial mean carries an energy-neutral exchange between the gas
    temperature profile and That.
    """
    model = LinearModel.build(eq, grid)
    v, x = grid.velocity_nodes, grid.x
    fhat = np.zeros(grid.shape)
    That = np.zeros(grid.nx)
    for k in range(1, modes + 1):
        for wave in (np.cos(2 * np.pi * k * x), np.sin(2 * np.pi * k * x)):
            a, b, c, e = rng.standard_normal(4) / k
            fhat += np.outer(wave, (a + b * v / math.sqrt(eq.T_inf) + c * v * v / eq.T_inf) * model.M)
            That += e * wave
    profile = model.phi * model.M
    c0 = rng.standard_normal()
    fhat += c0 * profile[None, :]
    That -= c0 * float(profile @ (grid.velocity_weights * v * v))
    scale = amplitude / max(float(np.max(np.abs(fhat))), float(np.max(np.abs(That))))
    return PerturbationState(scale * fhat, scale * That, eq).check_admissible(grid)
