"""Fixed-step RK4 integration of i dpsi/dt = H(t) psi from |N/2, -N/2>.

The base step is ``period / steps_per_cycle`` but never larger than
``courant / rho``, where rho bounds the spectral radius of H(t) after the
diagonal is centred. Without that cap RK4 loses norm quickly once N grows,
since |H| scales with N. No renormalisation is applied: the final
|<psi|psi> - 1| is the accuracy gauge, and the step is halved until it
meets the budget.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .errors import AccuracyError, DomainError
from .model import BatteryParams, Drive, HamiltonianTerms, build_terms
from .spin_algebra import StateVector, basis_state

_MODE = {Drive.HARMONIC: 0, Drive.STATIC: 1, Drive.OFF: 2}


class Protocol(str, enum.Enum):
    FIXED_FREQUENCY = "fixed_frequency"
    PERIOD_LOCKED = "period_locked"


@dataclass(frozen=True)
class EvolveSettings:
    steps_per_cycle: int | None = None
    norm_drift_budget: float = 1e-8
    max_refinements: int = 6
    courant: float = 0.02

    def __post_init__(self):
        if self.steps_per_cycle is not None and self.steps_per_cycle < 16:
            raise DomainError("steps_per_cycle must be >= 16")
        if not self.norm_drift_budget > 0:
            raise DomainError("norm_drift_budget must be positive")
        if self.max_refinements < 0:
            raise DomainError("max_refinements must be >= 0")
        if not self.courant > 0:
            raise DomainError("courant must be positive")

    def cycle_steps(self, n_atoms: int) -> int:
        if self.steps_per_cycle is not None:
            return self.steps_per_cycle
        return 256 if n_atoms <= 200 else 512


DEFAULT_SETTINGS = EvolveSettings()


@dataclass
class TraceResult:
    times: np.ndarray
    energies: np.ndarray
    norm_drift: float
    final_state: StateVector
    protocol: Protocol
    populations: np.ndarray
    initial_populations: np.ndarray
    n_atoms: int = 1
    refinements: int = 0

    @property
    def energies_per_atom(self) -> np.ndarray:
        return self.energies / self.n_atoms


@numba.njit(cache=True, nogil=True)
def _hmul(diag, band, c, x, out):
    n = x.shape[0]
    for k in range(n):
        out[k] = diag[k] * x[k]
    for k in range(n - 1):
        b = c * band[k]
        out[k] += b * x[k + 1]
        out[k + 1] += b * x[k]


@numba.njit(cache=True, nogil=True)
def _rk4(psi, diag, band, amp, omega, mode, t0, h, nsteps):
    n = psi.shape[0]
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    k4 = np.empty(n, np.complex128)
    y = np.empty(n, np.complex128)
    half = 0.5 * h
    for s in range(nsteps):
        t = t0 + s * h
        if mode == 0:
            ca = amp * math.cos(omega * t)
            cb = amp * math.cos(omega * (t + half))
            cc = amp * math.cos(omega * (t + h))
        elif mode == 1:
            ca = cb = cc = amp
        else:
            ca = cb = cc = 0.0
        _hmul(diag, band, ca, psi, k1)
        for k in range(n):
            y[k] = psi[k] - 1j * half * k1[k]
        _hmul(diag, band, cb, y, k2)
        for k in range(n):
            y[k] = psi[k] - 1j * half * k2[k]
        _hmul(diag, band, cb, y, k3)
        for k in range(n):
            y[k] = psi[k] - 1j * h * k3[k]
        _hmul(diag, band, cc, y, k4)
        for k in range(n):
            psi[k] -= (1j * h / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])


def _phase_diag(terms: HamiltonianTerms, params: BatteryParams) -> np.ndarray:
    # Any constant shift is a global phase. Without a drive the initial state
    # is stationary, so measuring energies from it makes RK4 exact there.
    if params.drive is Drive.OFF or params.amp == 0:
        return terms.diag - terms.diag[0]
    return terms.centered_diag


def spectral_bound(terms: HamiltonianTerms, params: BatteryParams) -> float:
    """Upper bound on |H(t) - const| used to cap the RK4 step."""
    d = terms.centered_diag
    drive = abs(params.amp) * terms.basis.spin if params.drive is not Drive.OFF else 0.0
    return 0.5 * (d.max() - d.min()) + drive


def advance(amplitudes: np.ndarray, params: BatteryParams, t0: float, t1: float,
            n_steps: int, terms: HamiltonianTerms | None = None) -> np.ndarray:
    """Integrate an arbitrary amplitude vector from t0 to t1 in n_steps RK4 steps.

    Returns a new array; the input is left untouched.
    """
    if terms is None:
        terms = build_terms(params)
    psi = np.array(amplitudes, dtype=np.complex128)
    h = (t1 - t0) / n_steps
    _rk4(psi, terms.centered_diag, terms.drive_band, float(params.amp),
         float(params.omega or 0.0), _MODE[params.drive], float(t0), h, int(n_steps))
    return psi


def _expect(pops, diag):
    return float(np.dot(pops, diag) / pops.sum())


def evolve(params: BatteryParams, t_final: float, settings: EvolveSettings = DEFAULT_SETTINGS,
           samples=None, reference: str = "auto",
           protocol: Protocol = Protocol.FIXED_FREQUENCY) -> TraceResult:
    """Evolve |N/2, -N/2> to ``t_final`` and record the stored energy.

    The trace is sampled at every macro step (period / steps_per_cycle) unless
    explicit ``samples`` times in (0, t_final] are given.
    """
    if not t_final > 0:
        raise DomainError(f"t_final must be positive, got {t_final}")
    terms = build_terms(params)
    macro = params.period / settings.cycle_steps(params.n_atoms)
    if samples is None:
        n_macro = max(1, math.ceil(t_final / macro - 1e-9))
        times = np.linspace(0.0, t_final, n_macro + 1)
    else:
        samples = np.asarray(samples, dtype=float)
        if samples.size == 0 or np.any(np.diff(samples) <= 0) or samples[0] <= 0:
            raise DomainError("sample times must be positive and strictly increasing")
        if samples[-1] > t_final * (1 + 1e-12):
            raise DomainError("sample times exceed t_final")
        times = np.concatenate(([0.0], samples))
    h_cap = min(macro, settings.courant / spectral_bound(terms, params))
    base_steps = [max(1, math.ceil((b - a) / h_cap - 1e-9)) for a, b in zip(times[:-1], times[1:])]

    psi0 = basis_state(terms.basis, -terms.basis.spin).amplitudes
    diag, band = _phase_diag(terms, params), terms.drive_band
    amp, omega, mode = float(params.amp), float(params.omega or 0.0), _MODE[params.drive]

    drift = math.inf
    for level in range(settings.max_refinements + 1):
        psi = psi0.copy()
        pops = np.empty((times.size, psi.size))
        pops[0] = np.abs(psi0) ** 2
        factor = 2 ** level
        for k, n in enumerate(base_steps):
            a, b = times[k], times[k + 1]
            steps = n * factor
            _rk4(psi, diag, band, amp, omega, mode, a, (b - a) / steps, steps)
            pops[k + 1] = np.abs(psi) ** 2
        drift = abs(float(np.vdot(psi, psi).real) - 1.0)
        if drift <= settings.norm_drift_budget:
            tr = TraceResult(times, None, drift, StateVector(terms.basis, psi),
                             Protocol(protocol), pops, pops[0], params.n_atoms, level)
            tr.energies = stored_energy_trace(tr, terms, reference)
            return tr
    raise AccuracyError(
        f"norm drift {drift:.3e} above budget {settings.norm_drift_budget:.1e} "
        f"after {settings.max_refinements} refinements", drift)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("DICKE_BATTERY_WORKERS", "1")))
    except ValueError:
        return 1


def map_ordered(fn, items, workers: int | None = None) -> list:
    """Apply ``fn`` to every item, results in input order whatever the pool size."""
    items = list(items)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    out = [None] * len(items)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(fn, x): i for i, x in enumerate(items)}
        for fut, i in futures.items():
            out[i] = fut.result()
    return out


def locked_energy(params: BatteryParams, period: float,
                  settings: EvolveSettings = DEFAULT_SETTINGS, reference: str = "auto"):
    """Stored energy after one drive period with omega = 2*pi/period.

    Returns the single-sample TraceResult of that run.
    """
    if params.drive is Drive.HARMONIC:
        run = BatteryParams(params.delta, params.amp, 2 * math.pi / period, params.g,
                            params.n_atoms, params.drive)
    else:
        run = params
    return evolve(run, period, settings, samples=[period], reference=reference,
                  protocol=Protocol.PERIOD_LOCKED)


def charge_scan(params: BatteryParams, t_grid, protocol: Protocol | str = Protocol.PERIOD_LOCKED,
                settings: EvolveSettings = DEFAULT_SETTINGS, workers: int | None = None,
                reference: str = "auto") -> TraceResult:
    """Stored energy on a grid of charging times.

    fixed_frequency: one run at params.omega, sampled on the grid.
    period_locked: an independent run per grid point T with omega = 2*pi/T.
    """
    protocol = Protocol(protocol)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or t_grid[0] <= 0 or np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be positive and strictly increasing")
    if protocol is Protocol.FIXED_FREQUENCY:
        tr = evolve(params, float(t_grid[-1]), settings, samples=t_grid, reference=reference,
                    protocol=protocol)
        return TraceResult(t_grid, tr.energies[1:], tr.norm_drift, tr.final_state, protocol,
                           tr.populations[1:], tr.initial_populations, params.n_atoms,
                           tr.refinements)
    runs = map_ordered(lambda T: locked_energy(params, T, settings, reference), t_grid, workers)
    return TraceResult(t_grid, np.array([r.energies[-1] for r in runs]),
                       max(r.norm_drift for r in runs), runs[-1].final_state, protocol,
                       np.array([r.populations[-1] for r in runs]), runs[0].initial_populations,
                       params.n_atoms, max(r.refinements for r in runs))


def stored_energy_trace(trace: TraceResult, terms: HamiltonianTerms,
                        reference: str = "auto") -> np.ndarray:
    """E(t) = <H_ref>(t) - <H_ref>(0) from the populations recorded in a trace.

    'auto' picks the internal (LMG) diagonal when g != 0, the free one otherwise.
    """
    ref = terms.reference(reference)
    e0 = _expect(trace.initial_populations, ref)
    pops = np.atleast_2d(trace.populations)
    out = pops @ ref / pops.sum(axis=1) - e0
    if np.array_equal(pops[0], trace.initial_populations):
        out[0] = 0.0
    return out
