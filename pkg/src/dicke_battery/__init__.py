"""Simulator for harmonic charging of an N-atom quantum battery."""

__version__ = "0.1.0"

from .closed_form import (EffectiveParams, bessel_j, e1_analytic, e1_max, effective_params,
                          locked_energy, solve_fullcharge_omega, solve_xi, static_energy,
                          static_max)
from .model import BatteryParams, Drive, apply_hamiltonian, build_terms, drive_coefficient
from .propagate import EvolveSettings, Protocol, TraceResult, charge_scan, evolve
from .spectrum_meanfield import diagonal_spectrum, ground_state, hp_polarization
from .spin_algebra import DickeBasis, StateVector, basis_state, build_ops, expectation
from .sweep import (find_first_peak, grid_amp_freq, loglog_slope, scan_period, sweep_atoms,
                    sweep_lambda)

__all__ = [
    "BatteryParams", "DickeBasis", "Drive", "EffectiveParams", "EvolveSettings", "Protocol",
    "StateVector", "TraceResult", "apply_hamiltonian", "basis_state", "bessel_j", "build_ops",
    "build_terms", "charge_scan", "diagonal_spectrum", "drive_coefficient", "e1_analytic",
    "e1_max", "effective_params", "evolve", "expectation", "find_first_peak", "grid_amp_freq",
    "ground_state", "hp_polarization", "locked_energy", "loglog_slope", "scan_period",
    "solve_fullcharge_omega", "solve_xi", "static_energy", "static_max", "sweep_atoms",
    "sweep_lambda",
]
