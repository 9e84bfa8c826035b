"""Kinetic BGK gas coupled to a conducting background on the 1D torus.

Nonlinear simulation with exact discrete conservation, entropy diagnostics,
hypocoercivity constants and spectra of the linearized system, the heat
kernel on the torus, and the diffusive cross-diffusion limit.
"""

from .phase_space import PhaseGrid, build_grid, maxwellian, moments

__all__ = ["PhaseGrid", "build_grid", "maxwellian", "moments"]
__version__ = "0.1.0"
