"""Collective spin algebra in the symmetric Dicke sector S = N/2.

Basis ordering is ascending in m: index 0 holds m = -S, index N holds m = +S.
Magnetic quantum numbers are tracked as integers 2m so parity and indexing
stay exact for half-integer spins.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

from .errors import DimensionError, DomainError, SizeError

MAX_ATOMS = 10_000


@dataclass(frozen=True)
class DickeBasis:
    n_atoms: int

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise SizeError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        if self.n_atoms > MAX_ATOMS:
            raise SizeError(f"n_atoms={self.n_atoms} exceeds the cap of {MAX_ATOMS}")

    @property
    def dim(self) -> int:
        return self.n_atoms + 1

    @property
    def spin(self) -> float:
        return self.n_atoms / 2

    @cached_property
    def two_m(self) -> np.ndarray:
        """Integer array of 2m, ascending from -N to N."""
        arr = np.arange(-self.n_atoms, self.n_atoms + 1, 2, dtype=np.int64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def m_values(self) -> np.ndarray:
        arr = self.two_m / 2.0
        arr.setflags(write=False)
        return arr

    def index_of(self, m) -> int:
        two_m = 2 * m
        if two_m != int(round(two_m)):
            raise DomainError(f"m={m} is not a multiple of 1/2")
        two_m = int(round(two_m))
        if abs(two_m) > self.n_atoms or (self.n_atoms - two_m) % 2:
            raise DomainError(f"m={m} is not in the S={self.spin} multiplet")
        return (two_m + self.n_atoms) // 2

    def parity(self, index):
        """Parity label of (N/2 - m) at a basis index: 0 even, 1 odd."""
        if np.ndim(index):
            return (self.n_atoms - np.asarray(index)) % 2
        return (self.n_atoms - int(index)) % 2


@dataclass(frozen=True)
class HermitianBand:
    """Hermitian tridiagonal matrix: real diagonal plus complex superdiagonal.

    Entry (k, k+1) is ``upper[k]``; entry (k+1, k) is its conjugate.
    """

    diag: np.ndarray
    upper: np.ndarray

    @property
    def dim(self) -> int:
        return self.diag.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[0] != self.dim:
            raise DimensionError(f"operator dim {self.dim} vs vector length {x.shape[0]}")
        out = self.diag * x
        out = out.astype(np.result_type(out, self.upper, x), copy=False)
        out[:-1] += self.upper * x[1:]
        out[1:] += np.conj(self.upper) * x[:-1]
        return out

    def __matmul__(self, x):
        if isinstance(x, StateVector):
            return StateVector(x.basis, self.matvec(x.amplitudes))
        return self.matvec(x)

    def toarray(self) -> np.ndarray:
        """Dense copy, for tests and small-N oracles only."""
        dtype = np.result_type(self.diag, self.upper)
        out = np.diag(self.diag.astype(dtype))
        if self.dim > 1:
            out += np.diag(self.upper, 1) + np.diag(np.conj(self.upper), -1)
        return out


@dataclass(frozen=True)
class CollectiveOps:
    basis: DickeBasis
    sx_band: np.ndarray

    @property
    def s_squared(self) -> float:
        s = self.basis.spin
        return s * (s + 1)

    @cached_property
    def sx(self) -> HermitianBand:
        return HermitianBand(np.zeros(self.basis.dim), self.sx_band)

    @cached_property
    def sy(self) -> HermitianBand:
        # <m|Sy|m+1> = +i/2 sqrt(S(S+1) - m(m+1))
        return HermitianBand(np.zeros(self.basis.dim), 1j * self.sx_band)

    @cached_property
    def sz(self) -> HermitianBand:
        return HermitianBand(np.asarray(self.basis.m_values, dtype=float),
                             np.zeros(self.basis.dim - 1))


def build_ops(basis: DickeBasis) -> CollectiveOps:
    m = basis.m_values[:-1]
    s = basis.spin
    band = 0.5 * np.sqrt(s * (s + 1) - m * (m + 1))
    band.setflags(write=False)
    return CollectiveOps(basis, band)


@dataclass
class StateVector:
    basis: DickeBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.basis.dim,):
            raise DimensionError(
                f"amplitudes of shape {self.amplitudes.shape} for basis dim {self.basis.dim}")

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.basis, self.amplitudes.copy())


def basis_state(basis: DickeBasis, m) -> StateVector:
    amps = np.zeros(basis.dim, dtype=np.complex128)
    amps[basis.index_of(m)] = 1.0
    return StateVector(basis, amps)


Observable = Union[HermitianBand, np.ndarray, Callable[[np.ndarray], np.ndarray]]


def expectation(op: Observable, psi: StateVector, *, imag_tol: float = 1e-12) -> float:
    """<psi|op|psi> / <psi|psi> for a band operator or a diagonal in m.

    ``op`` may be a HermitianBand, an array of diagonal values, or a function
    of the m-values returning that array.
    """
    amps = psi.amplitudes
    if callable(op) and not isinstance(op, HermitianBand):
        op = np.asarray(op(psi.basis.m_values), dtype=float)
    if isinstance(op, HermitianBand):
        val = np.vdot(amps, op.matvec(amps))
    else:
        diag = np.asarray(op)
        if diag.shape != amps.shape:
            raise DimensionError(f"diagonal of length {diag.shape} vs state dim {amps.shape}")
        val = np.dot(np.abs(amps) ** 2, diag)
    norm = np.vdot(amps, amps).real
    val = complex(val) / norm
    if abs(val.imag) > imag_tol * max(1.0, abs(val.real)):
        raise DomainError(f"expectation has imaginary residue {val.imag:.3e}; operator not Hermitian?")
    return val.real


def casimir(ops: CollectiveOps, psi: StateVector) -> float:
    """<Sx^2 + Sy^2 + Sz^2> computed from the band operators."""
    amps = psi.amplitudes
    total = sum(np.vdot(v, v).real for v in (ops.sx.matvec(amps), ops.sy.matvec(amps),
                                              ops.sz.matvec(amps)))
    return total / np.vdot(amps, amps).real
