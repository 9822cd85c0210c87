"""Battery Hamiltonian: free and LMG-interacting diagonals plus the Sx drive.

Energies are in units of the level splitting delta, times in 1/delta.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionError, DomainError
from .spin_algebra import CollectiveOps, DickeBasis, StateVector, build_ops


class Drive(str, enum.Enum):
    HARMONIC = "harmonic"
    STATIC = "static"
    OFF = "off"


@dataclass(frozen=True)
class BatteryParams:
    delta: float = 1.0
    amp: float = 0.0
    omega: float | None = None
    g: float = 0.0
    n_atoms: int = 1
    drive: Drive = Drive.HARMONIC

    def __post_init__(self):
        object.__setattr__(self, "drive", Drive(self.drive))
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise DomainError(f"n_atoms must be a positive integer, got {self.n_atoms}")
        if self.drive is Drive.HARMONIC and not (self.omega is not None and self.omega > 0):
            raise DomainError("harmonic drive needs omega > 0")

    @classmethod
    def from_lambda(cls, lam: float, delta: float = 1.0, **kw) -> "BatteryParams":
        return cls(delta=delta, g=lam * delta, **kw)

    @property
    def lam(self) -> float:
        return self.g / self.delta

    @property
    def period(self) -> float:
        """Drive period for a harmonic drive, 2*pi/delta otherwise."""
        if self.drive is Drive.HARMONIC:
            return 2 * math.pi / self.omega
        return 2 * math.pi / self.delta


def drive_coefficient(params: BatteryParams, t: float) -> float:
    if params.drive is Drive.HARMONIC:
        return params.amp * math.cos(params.omega * t)
    if params.drive is Drive.STATIC:
        return params.amp
    return 0.0


@dataclass(frozen=True)
class HamiltonianTerms:
    ops: CollectiveOps
    diag_free: np.ndarray
    diag_internal: np.ndarray
    interacting: bool = field(default=False)

    @property
    def basis(self) -> DickeBasis:
        return self.ops.basis

    @property
    def drive_band(self) -> np.ndarray:
        return self.ops.sx_band

    @property
    def diag(self) -> np.ndarray:
        """Diagonal of the undriven Hamiltonian that generates the dynamics."""
        return self.diag_internal if self.interacting else self.diag_free

    def reference(self, which: str = "auto") -> np.ndarray:
        """Diagonal used for stored energy: 'free', 'internal' or 'auto' (by g)."""
        if which == "auto":
            return self.diag
        if which == "free":
            return self.diag_free
        if which == "internal":
            return self.diag_internal
        raise ValueError(f"unknown energy reference {which!r}")

    @cached_property
    def centered_diag(self) -> np.ndarray:
        # constant shift = global phase; keeps the RK4 spectral radius small
        d = self.diag
        return d - 0.5 * (d.max() + d.min())


def internal_diagonal(basis: DickeBasis, delta: float, g: float) -> np.ndarray:
    """E_int(m) = delta*m + (g/N)(S(S+1) - m^2 - N/2)."""
    m = basis.m_values
    n = basis.n_atoms
    s = basis.spin
    return delta * m + (g / n) * (s * (s + 1) - m * m - n / 2)


def build_terms(params: BatteryParams) -> HamiltonianTerms:
    basis = DickeBasis(params.n_atoms)
    ops = build_ops(basis)
    free = params.delta * basis.m_values
    internal = internal_diagonal(basis, params.delta, params.g) if params.g else free.copy()
    for arr in (free, internal):
        arr.setflags(write=False)
    return HamiltonianTerms(ops, free, internal, interacting=params.g != 0)


def apply_hamiltonian(terms: HamiltonianTerms, params: BatteryParams, t: float,
                      psi: StateVector) -> StateVector:
    amps = psi.amplitudes
    if amps.shape[0] != terms.basis.dim:
        raise DimensionError(f"state dim {amps.shape[0]} vs Hamiltonian dim {terms.basis.dim}")
    c = drive_coefficient(params, t)
    out = terms.diag * amps
    if c:
        band = c * terms.drive_band
        out[:-1] += band * amps[1:]
        out[1:] += band * amps[:-1]
    return StateVector(psi.basis, out)


def internal_energy_of_state(terms: HamiltonianTerms, psi: StateVector,
                             reference: str = "auto") -> float:
    diag = terms.reference(reference)
    pops = psi.populations()
    return float(np.dot(pops, diag) / pops.sum())
