"""Numerical BCS gap equation for radial potentials at high density.

Solves the zero-temperature gap equation, finds the critical temperature
from the linearised equation, and evaluates the Fermi-sphere quantities
that control the weak-coupling asymptotics.
"""
from .asymptotics import THM1_TARGET, UNIVERSAL_RATIO, SweepRecord, predict_tc, predict_xi, thm1_functional
from .fermi_ops import b_mu, phi_hat_radial, spectrum
from .gap_solver import GridConfig, SolverConfig, energy_gap, gap_rhs, m_integral, solve_gap
from .potential import RadialPotential, admissibility
from .tc_solver import TcConfig, critical_temperature

__version__ = "0.1.0"

__all__ = [
    "GridConfig", "RadialPotential", "SolverConfig", "SweepRecord", "THM1_TARGET", "TcConfig",
    "UNIVERSAL_RATIO", "admissibility", "b_mu", "critical_temperature", "energy_gap", "gap_rhs",
    "m_integral", "phi_hat_radial", "predict_tc", "predict_xi", "solve_gap", "spectrum", "thm1_functional",
]
