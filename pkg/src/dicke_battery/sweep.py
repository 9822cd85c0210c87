"""Optimum location and parameter sweeps (charging period, amplitude-frequency
surfaces, atom number, coupling strength).

Sweep points are independent; they are fanned out with ``map_ordered`` so
results land in pre-indexed slots and do not depend on the worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import closed_form
from .errors import BatteryError, DomainError
from .model import BatteryParams, Drive
from .propagate import (DEFAULT_SETTINGS, EvolveSettings, Protocol, charge_scan, locked_energy,
                        map_ordered)

PEAK_REL_HEIGHT = 0.1


@dataclass(frozen=True)
class Peak:
    t: float
    e: float
    index: int
    found: bool


def _parabola_vertex(t3, e3):
    a, b, c = np.polyfit(np.asarray(t3) - t3[1], e3, 2)
    if not a < 0:
        return None
    tv = -b / (2 * a)
    lo, hi = t3[0] - t3[1], t3[2] - t3[1]
    tv = min(max(tv, lo), hi)
    return t3[1] + tv, c + b * tv + a * tv * tv


def find_first_peak(t, e, min_height: float | None = None, refine: bool = True) -> Peak:
    """Earliest interior local maximum e[k-1] < e[k] >= e[k+1].

    Maxima lower than ``min_height`` are skipped; by default that is 10% of the
    largest sample, which discards round-off wiggles before the first real
    charging peak. The located sample is refined by a three-point parabola.
    Without any interior peak the global maximum is returned with found=False.
    """
    t = np.asarray(t, dtype=float)
    e = np.asarray(e, dtype=float)
    if t.size < 5 or e.size != t.size:
        raise DomainError("need at least 5 grid points with matching energies")
    if np.any(np.diff(t) <= 0):
        raise DomainError("grid must be strictly increasing")
    finite = np.isfinite(e)
    if not finite.any():
        raise DomainError("no finite energies")
    top = np.nanmax(e)
    if min_height is None:
        min_height = PEAK_REL_HEIGHT * top if top > 0 else -math.inf
    for k in range(1, e.size - 1):
        if e[k - 1] < e[k] >= e[k + 1] and e[k] >= min_height:
            if refine:
                vert = _parabola_vertex(t[k - 1:k + 2], e[k - 1:k + 2])
                if vert is not None:
                    return Peak(float(vert[0]), float(vert[1]), k, True)
            return Peak(float(t[k]), float(e[k]), k, True)
    k = int(np.nanargmax(e))
    return Peak(float(t[k]), float(e[k]), k, False)


@dataclass
class PeriodScan:
    t: np.ndarray
    energy: np.ndarray
    n_atoms: int
    peak: Peak
    global_peak: Peak
    norm_drift: float

    @property
    def energy_per_atom(self) -> np.ndarray:
        return self.energy / self.n_atoms


def _curve(params, t_grid, protocol, settings, workers):
    return charge_scan(params, t_grid, protocol, settings, workers)


def scan_period(params: BatteryParams, t_range=(0.5, 30.0), n_points: int = 400,
                protocol: Protocol | str = Protocol.PERIOD_LOCKED,
                settings: EvolveSettings = DEFAULT_SETTINGS, workers: int | None = None,
                min_height: float | None = None) -> PeriodScan:
    """Stored energy E(T) on a uniform grid plus its first-peak optimum."""
    lo, hi = t_range
    if not 0 < lo < hi:
        raise DomainError(f"invalid period range {t_range}")
    t = np.linspace(lo, hi, n_points)
    tr = _curve(params, t, protocol, settings, workers)
    gk = int(np.argmax(tr.energies))
    return PeriodScan(t, tr.energies, params.n_atoms,
                      find_first_peak(t, tr.energies, min_height),
                      Peak(float(t[gk]), float(tr.energies[gk]), gk, True),
                      tr.norm_drift)


def locate_first_peak(params: BatteryParams, t_range=(0.5, 20.0), n_points: int = 79,
                      refine_points: int = 33, protocol: Protocol | str = Protocol.PERIOD_LOCKED,
                      settings: EvolveSettings = DEFAULT_SETTINGS):
    """Coarse scan, then a fine grid across the bracketing cells of the first peak.

    Returns (refined Peak, coarse PeriodScan).
    """
    coarse = scan_period(params, t_range, n_points, protocol, settings, workers=1)
    pk = coarse.peak
    if not pk.found:
        return pk, coarse
    k = pk.index
    fine_t = np.linspace(coarse.t[k - 1], coarse.t[k + 1], refine_points)
    fine_e = _curve(params, fine_t, protocol, settings, 1).energies
    j = int(np.argmax(fine_e))
    if 0 < j < refine_points - 1:
        vert = _parabola_vertex(fine_t[j - 1:j + 2], fine_e[j - 1:j + 2])
        if vert is not None:
            return Peak(float(vert[0]), float(vert[1]), k, True), coarse
    return Peak(float(fine_t[j]), float(fine_e[j]), k, True), coarse


@dataclass
class ScanResult:
    axis: np.ndarray
    e_max: np.ndarray
    t_max: np.ndarray
    e_global: np.ndarray
    t_global: np.ndarray
    has_peak: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def omega_max(self) -> np.ndarray:
        return 2 * np.pi / self.t_max


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or x.size != y.size:
        raise DomainError("need at least two matching points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("log-log fit needs strictly positive data")
    lx, ly = np.log(x), np.log(y)
    lx = lx - lx.mean()
    return float(np.dot(lx, ly - ly.mean()) / np.dot(lx, lx))


def fit_scaling(x, y, max_drops: int = 3, min_points: int = 3):
    """Log-log slope, dropping the smallest x while that halves the rms residual.

    Returns (slope, number of dropped points).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)

    def fit(lo):
        lx, ly = np.log(x[lo:]), np.log(y[lo:])
        s = loglog_slope(x[lo:], y[lo:])
        resid = ly - ly.mean() - s * (lx - lx.mean())
        return s, float(np.sqrt(np.mean(resid ** 2)))

    drops = 0
    slope, rms = fit(0)
    while drops < max_drops and x.size - drops - 1 >= min_points:
        s2, r2 = fit(drops + 1)
        if not r2 < 0.5 * rms:
            break
        drops += 1
        slope, rms = s2, r2
    return slope, drops


def _optimum_row(params, t_range, n_points, refine_points, protocol, settings):
    pk, coarse = locate_first_peak(params, t_range, n_points, refine_points, protocol, settings)
    n = params.n_atoms
    return (pk.e / n, pk.t, coarse.global_peak.e / n, coarse.global_peak.t, pk.found)


def _collect(axis, rows, metadata):
    cols = list(zip(*rows)) if rows else [[]] * 5
    return ScanResult(np.asarray(axis, dtype=float), np.array(cols[0], dtype=float),
                      np.array(cols[1], dtype=float), np.array(cols[2], dtype=float),
                      np.array(cols[3], dtype=float), np.array(cols[4], dtype=bool), metadata)


def sweep_atoms(lam: float, amp: float, n_list, protocol: Protocol | str = Protocol.PERIOD_LOCKED,
                t_range=(0.5, 20.0), n_points: int = 79, refine_points: int = 33,
                omega: float | None = None, delta: float = 1.0,
                settings: EvolveSettings = DEFAULT_SETTINGS, workers: int | None = None) -> ScanResult:
    """First-peak E_max/(N delta) and T_max per atom number, with scaling slopes."""
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError("n_list must be strictly ascending")
    protocol = Protocol(protocol)
    omega = omega if omega is not None else 1.0

    def row(n):
        p = BatteryParams.from_lambda(lam, delta, amp=amp, omega=omega, n_atoms=n)
        return _optimum_row(p, t_range, n_points, refine_points, protocol, settings)

    rows = map_ordered(row, n_list, workers)
    res = _collect(n_list, rows, {})
    e_total = res.e_max * res.axis
    meta = {"lambda": lam, "amp": amp, "delta": delta, "protocol": protocol.value,
            "t_range": list(t_range), "n_points": n_points, "refine_points": refine_points}
    if len(n_list) >= 2 and np.all(e_total > 0):
        slope, drops = fit_scaling(res.axis, e_total)
        meta.update(slope=slope, slope_per_atom=slope - 1.0, dropped_smallest=drops)
    res.metadata = meta
    return res


def sweep_lambda(n_atoms: int, amp: float, lambda_list,
                 protocol: Protocol | str = Protocol.PERIOD_LOCKED, t_range=(0.5, 20.0),
                 n_points: int = 79, refine_points: int = 33, omega: float | None = None,
                 delta: float = 1.0, settings: EvolveSettings = DEFAULT_SETTINGS,
                 workers: int | None = None) -> ScanResult:
    """First-peak E_max/(N delta) and T_max per coupling strength lambda."""
    protocol = Protocol(protocol)
    omega = omega if omega is not None else 1.0
    lambda_list = [float(x) for x in lambda_list]

    def row(lam):
        p = BatteryParams.from_lambda(lam, delta, amp=amp, omega=omega, n_atoms=n_atoms)
        return _optimum_row(p, t_range, n_points, refine_points, protocol, settings)

    rows = map_ordered(row, lambda_list, workers)
    return _collect(lambda_list, rows, {"n_atoms": n_atoms, "amp": amp, "delta": delta,
                                        "protocol": protocol.value, "t_range": list(t_range),
                                        "n_points": n_points, "refine_points": refine_points})


@dataclass
class Surface:
    amps: np.ndarray
    omegas: np.ndarray
    energy: np.ndarray
    ridge_omega: np.ndarray
    ridge_energy: np.ndarray
    mode: str
    missing: int


def _analytic_cell(amp, omega, n_atoms, delta):
    try:
        return closed_form.locked_energy(2 * math.pi / omega, amp, n_atoms, delta) / delta
    except BatteryError:
        return math.nan


def _numeric_cell(amp, omega, n_atoms, delta, settings):
    p = BatteryParams(delta=delta, amp=amp, omega=omega, n_atoms=n_atoms, drive=Drive.HARMONIC)
    return locked_energy(p, 2 * math.pi / omega, settings).energies[-1] / (n_atoms * delta)


def grid_amp_freq(amps, omegas, mode: str = "analytic_locked", n_atoms: int = 1,
                  delta: float = 1.0, settings: EvolveSettings = DEFAULT_SETTINGS,
                  workers: int | None = None) -> Surface:
    """Period-locked stored energy on an A x omega grid and its ridge omega_max(A).

    Cells where the closed form has no solution are NaN and counted in
    ``missing``; the ridge skips them.
    """
    amps = np.asarray(amps, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    if mode == "analytic_locked":
        if n_atoms != 1:
            raise DomainError("analytic_locked surfaces are only defined for N = 1")

        def row(a):
            return [_analytic_cell(a, w, n_atoms, delta) for w in omegas]
    elif mode == "numeric":
        def row(a):
            return [_numeric_cell(a, w, n_atoms, delta, settings) for w in omegas]
    else:
        raise DomainError(f"unknown surface mode {mode!r}")
    energy = np.array(map_ordered(row, amps, workers), dtype=float).reshape(amps.size, omegas.size)
    ridge_w = np.full(amps.size, math.nan)
    ridge_e = np.full(amps.size, math.nan)
    for i in range(amps.size):
        if np.isfinite(energy[i]).any():
            j = int(np.nanargmax(energy[i]))
            ridge_w[i], ridge_e[i] = omegas[j], energy[i, j]
    return Surface(amps, omegas, energy, ridge_w, ridge_e, mode, int(np.isnan(energy).sum()))
