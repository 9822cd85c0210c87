"""Spectrum of the undriven LMG Hamiltonian and its Holstein-Primakoff limit.

H0 = delta Sz + (g/N)(S^2 - Sz^2 - N/2) commutes with Sz, so every Dicke
state is an eigenstate and no diagonalisation is needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BatteryParams, internal_diagonal
from .spin_algebra import DickeBasis

LAMBDA_C = -1.0


def diagonal_spectrum(params: BatteryParams) -> np.ndarray:
    """E(m) for m = -N/2 .. N/2 in ascending-m order."""
    return internal_diagonal(DickeBasis(params.n_atoms), params.delta, params.g)


@dataclass(frozen=True)
class GroundStateInfo:
    m0: float
    e0: float
    e1: float
    gap: float
    sz_per_spin: float
    parity0: int
    tie: bool
    n_atoms: int


def ground_state(params: BatteryParams) -> GroundStateInfo:
    """Lowest level of the diagonal spectrum; ties go to the smaller m."""
    basis = DickeBasis(params.n_atoms)
    e = diagonal_spectrum(params)
    k0 = int(np.argmin(e))
    order = np.argsort(e, kind="stable")
    e1 = float(e[order[1]]) if e.size > 1 else math.nan
    tie = e.size > 1 and e1 == float(e[k0])
    m0 = float(basis.m_values[k0])
    return GroundStateInfo(
        m0=m0,
        e0=float(e[k0]),
        e1=e1,
        gap=e1 - float(e[k0]),
        sz_per_spin=m0 / basis.spin,
        parity0=int(basis.parity(k0)),
        tie=bool(tie),
        n_atoms=params.n_atoms,
    )


@dataclass(frozen=True)
class MeanFieldResult:
    lam: float
    sz_per_spin_inf: float
    beta_sq: float | None
    lambda_c: float = LAMBDA_C


def hp_polarization(lam: float, n_atoms: int | None = None) -> MeanFieldResult:
    """Thermodynamic-limit <Sz>/(N/2) from the shifted Holstein-Primakoff boson.

    Below lambda_c the condensate occupation is beta^2 = N(1 + lam)/(2 lam)
    and <Sz>/(N/2) = 1/lam; otherwise the fully polarised value -1.
    ``beta_sq`` is None on the polarised branch or when N is not given.
    """
    if lam < LAMBDA_C:
        beta_sq = None if n_atoms is None else n_atoms * (1 + lam) / (2 * lam)
        return MeanFieldResult(lam, 1.0 / lam, beta_sq)
    return MeanFieldResult(lam, -1.0, None)
