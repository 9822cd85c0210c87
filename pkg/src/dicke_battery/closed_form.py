"""Rotating-frame closed forms for the harmonically driven battery.

After the unitary U = exp[i A xi sin(wt) Sx / (w sqrt N)] with xi chosen to
cancel the counter-rotating coefficient, the single-atom problem reduces to
a static two-level Hamiltonian with detuning ``delta_eff`` and coupling
``a_eff``. Everything here is pure and cheap; validity is only claimed for
N = 1 even though the formulas carry sqrt(N).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DomainError, RootNotBracketedError

BESSEL_MAX_ARG = 30.0
_SERIES_MAX_ARG = 5.0
_XI_SCAN = 64
_OMEGA_SCAN = 64


def _bessel_series(order: int, x: float) -> float:
    # sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)
    half = 0.5 * x
    term = half ** order / math.factorial(order)
    total = term
    q = -half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + order))
        total += term
        if abs(term) <= 1e-16 * abs(total):
            return total


def _bessel_miller(order: int, x: float) -> float:
    # backward recurrence normalised with J0 + 2 sum J_2k = 1
    start = 2 * (int(x + 20 + 10 * math.sqrt(x)) // 2 + 1)
    j_next, j_cur = 0.0, 1e-30
    norm = 0.0
    want = 0.0
    for k in range(start, 0, -1):
        j_prev = (2 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            j_next *= 1e-250
            j_cur *= 1e-250
            norm *= 1e-250
            want *= 1e-250
        if k - 1 == order:
            want = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2 * j_cur
    norm += j_cur
    return want / norm


def bessel_j(order: int, x: float) -> float:
    """Bessel function of the first kind, integer order 0 or 1, |x| <= 30."""
    if order not in (0, 1):
        raise DomainError(f"only orders 0 and 1 are supported, got {order}")
    x = float(x)
    if not abs(x) <= BESSEL_MAX_ARG:
        raise DomainError(f"|x|={abs(x):.3g} beyond the supported range {BESSEL_MAX_ARG}")
    sign = -1.0 if (order == 1 and x < 0) else 1.0
    ax = abs(x)
    if ax == 0.0:
        return 1.0 if order == 0 else 0.0
    if ax <= _SERIES_MAX_ARG:
        return sign * _bessel_series(order, ax)
    return sign * _bessel_miller(order, ax)


def _bisect(f, lo, hi, f_lo, f_hi, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return 0.5 * (lo + hi)


def xi_residual(xi: float, amp: float, omega: float, n_atoms: int = 1, delta: float = 1.0) -> float:
    """Counter-rotating coefficient A(1 - xi/sqrt N) - 2 delta J1(A xi / (w sqrt N))."""
    rn = math.sqrt(n_atoms)
    return amp * (1 - xi / rn) - 2 * delta * bessel_j(1, amp * xi / (omega * rn))


def solve_xi(amp: float, omega: float, n_atoms: int = 1, delta: float = 1.0,
             tol: float = 1e-12) -> float:
    """Smallest root of the counter-rotating cancellation condition on [0, 1].

    A = 0 returns 0 by convention. The interval is scanned on 64 cells first
    so the root continuously connected to the small-A limit is picked.
    """
    if amp < 0 or not omega > 0:
        raise DomainError(f"need amp >= 0 and omega > 0, got amp={amp}, omega={omega}")
    if amp == 0:
        return 0.0

    def f(x):
        return xi_residual(x, amp, omega, n_atoms, delta)

    grid = np.linspace(0.0, 1.0, _XI_SCAN + 1)
    f_prev = f(0.0)
    for a, b in zip(grid[:-1], grid[1:]):
        f_b = f(b)
        if f_prev == 0.0:
            return float(a)
        if (f_prev > 0) != (f_b > 0):
            return _bisect(f, a, b, f_prev, f_b, tol)
        f_prev = f_b
    if f_prev == 0.0:
        return 1.0
    raise RootNotBracketedError(
        f"no sign change of the xi condition on [0, 1] (A={amp}, omega={omega}, N={n_atoms})",
        f(0.0), f_prev)


@dataclass(frozen=True)
class EffectiveParams:
    xi_bar: float
    delta_eff: float
    a_eff: float
    rabi: float
    theta: float
    amp: float
    omega: float
    n_atoms: int = 1
    delta: float = 1.0

    @property
    def eps_plus(self) -> float:
        return 0.5 * self.rabi

    @property
    def bessel_arg(self) -> float:
        return self.amp * self.xi_bar / (self.omega * math.sqrt(self.n_atoms))


def effective_params(amp: float, omega: float, n_atoms: int = 1,
                     delta: float = 1.0) -> EffectiveParams:
    xi = solve_xi(amp, omega, n_atoms, delta)
    rn = math.sqrt(n_atoms)
    delta_eff = delta * bessel_j(0, amp * xi / (omega * rn)) - omega
    a_eff = 0.5 * amp * (1 - xi / rn)
    rabi = math.hypot(delta_eff, 2 * a_eff)
    theta = 0.5 * math.atan2(2 * a_eff, delta_eff)
    return EffectiveParams(xi, delta_eff, a_eff, rabi, theta, amp, omega, n_atoms, delta)


def e1_analytic(t, eff: EffectiveParams, delta: float | None = None):
    """Single-atom stored energy delta * (2 a_eff^2 / rabi^2) (1 - cos(rabi t))."""
    delta = eff.delta if delta is None else delta
    t = np.asarray(t, dtype=float)
    if eff.rabi == 0.0:
        out = np.zeros_like(t)
    else:
        out = delta * (2 * eff.a_eff ** 2 / eff.rabi ** 2) * (1 - np.cos(eff.rabi * t))
    return float(out) if out.ndim == 0 else out


def amplitudes(t, eff: EffectiveParams):
    """(c_e, c_g) of the single-atom state in the rotating frame."""
    t = np.asarray(t, dtype=float)
    if eff.rabi == 0.0:
        return np.zeros_like(t, dtype=complex), np.ones_like(t, dtype=complex)
    s = np.sin(eff.eps_plus * t)
    c_e = -1j * (2 * eff.a_eff / eff.rabi) * s
    c_g = np.cos(eff.eps_plus * t) + 1j * (eff.delta_eff / eff.rabi) * s
    return c_e, c_g


def e1_max(eff: EffectiveParams, delta: float | None = None, n: int = 1):
    """Unconstrained-time maximum and the time n*pi/rabi (n odd) where it occurs."""
    delta = eff.delta if delta is None else delta
    if eff.rabi == 0.0:
        raise DegenerateInputError("rabi frequency is zero; maximum time undefined")
    if n < 1 or n % 2 == 0:
        raise DomainError(f"n must be a positive odd integer, got {n}")
    energy = delta * 4 * eff.a_eff ** 2 / (eff.delta_eff ** 2 + 4 * eff.a_eff ** 2)
    return energy, n * math.pi / eff.rabi


def locked_energy(period: float, amp: float, n_atoms: int = 1, delta: float = 1.0) -> float:
    """Closed-form stored energy at T with the drive locked to omega = 2*pi/T."""
    eff = effective_params(amp, 2 * math.pi / period, n_atoms, delta)
    return e1_analytic(period, eff, delta)


def fullcharge_residual(omega: float, amp: float, delta: float = 1.0, n_atoms: int = 1) -> float:
    """omega - delta J0(A xi(omega) / (omega sqrt N)); zero where delta_eff vanishes."""
    return -effective_params(amp, omega, n_atoms, delta).delta_eff


def solve_fullcharge_omega(amp: float, delta: float = 1.0, n_atoms: int = 1,
                           omega_lo: float | None = None, tol: float = 1e-10) -> float:
    """Drive frequency on (omega_lo, delta] that zeroes the effective detuning.

    The interval is scanned downward from delta and the first sign change is
    bisected, so the root connected to omega = delta at A = 0 is returned.
    """
    if amp < 0:
        raise DomainError(f"amp must be >= 0, got {amp}")
    if amp == 0:
        return float(delta)
    lo = 0.05 * delta if omega_lo is None else omega_lo

    def f(w):
        return fullcharge_residual(w, amp, delta, n_atoms)

    grid = np.linspace(delta, lo, _OMEGA_SCAN + 1)
    f_hi = f(delta)
    if f_hi == 0.0:
        return float(delta)
    f_first = f_hi
    for b, a in zip(grid[:-1], grid[1:]):
        try:
            f_a = f(a)
        except RootNotBracketedError:
            break
        if f_a == 0.0:
            return float(a)
        if (f_a > 0) != (f_hi > 0):
            return _bisect(f, a, b, f_a, f_hi, min(tol, 1e-13 * delta))
        f_hi = f_a
    raise RootNotBracketedError(
        f"no sign change of the full-charge condition on ({lo}, {delta}] for A={amp}",
        f_hi, f_first)


def static_energy(t, amp: float, delta: float = 1.0):
    """Stored energy under the constant field A*Sx (single atom)."""
    t = np.asarray(t, dtype=float)
    w = math.hypot(delta, amp)
    out = delta * 0.5 * amp ** 2 / w ** 2 * (1 - np.cos(w * t))
    return float(out) if out.ndim == 0 else out


def static_max(amp: float, delta: float = 1.0) -> float:
    return delta * amp ** 2 / (delta ** 2 + amp ** 2)
