import math

import numpy as np
import pytest

from dicke_battery import closed_form as cf
from dicke_battery.errors import AccuracyError, DomainError
from dicke_battery.model import BatteryParams, Drive, build_terms
from dicke_battery.propagate import (EvolveSettings, Protocol, TraceResult, advance,
                                     charge_scan, evolve, locked_energy, map_ordered,
                                     stored_energy_trace)
from dicke_battery.spin_algebra import DickeBasis, StateVector, basis_state, build_ops, casimir

scipy_linalg = pytest.importorskip("scipy.linalg")


def dense_reference_energy(params, t_final, n_steps):
    """Piecewise-constant propagator exp(-i H(t_mid) h) built from dense matrices."""
    basis = DickeBasis(params.n_atoms)
    ops = build_ops(basis)
    m = basis.m_values
    e_int = params.delta * m + params.g / params.n_atoms * (
        basis.spin * (basis.spin + 1) - m ** 2 - params.n_atoms / 2)
    h0 = np.diag(e_int)
    sx = ops.sx.toarray()
    psi = np.zeros(basis.dim, complex)
    psi[0] = 1.0
    h = t_final / n_steps
    for k in range(n_steps):
        tm = (k + 0.5) * h
        c = params.amp * math.cos(params.omega * tm)
        psi = scipy_linalg.expm(-1j * h * (h0 + c * sx)) @ psi
    pops = np.abs(psi) ** 2
    return float(pops @ e_int - e_int[0])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_against_dense_expm_oracle(n):
    p = BatteryParams.from_lambda(0.7, amp=1.0, omega=1.3, n_atoms=n)
    ref = dense_reference_energy(p, 5.0, 8000)
    tr = evolve(p, 5.0, samples=[5.0])
    assert abs(tr.energies[-1] - ref) <= 1e-6


def test_drive_off_is_stationary():
    for drive, omega in ((Drive.OFF, None), (Drive.HARMONIC, 1.0)):
        p = BatteryParams.from_lambda(-1.2, amp=0.0, drive=drive, omega=omega, n_atoms=20)
        tr = evolve(p, 10.0)
        assert np.max(np.abs(tr.energies)) < 1e-12
        assert tr.norm_drift < 1e-12
    p = BatteryParams(amp=0.0, omega=1.0, n_atoms=5)
    tr = charge_scan(p, np.linspace(0.5, 5, 10), Protocol.FIXED_FREQUENCY)
    assert np.all(tr.energies == 0.0)


def test_static_charger_exact():
    p = BatteryParams(amp=1.0, drive=Drive.STATIC, n_atoms=1)
    t = np.linspace(0.05, 30, 600)
    tr = evolve(p, 30.0, samples=t)
    assert tr.energies[0] == 0.0
    assert np.max(np.abs(tr.energies[1:] - cf.static_energy(t, 1.0))) <= 1e-6
    tr = evolve(p, math.pi / math.sqrt(2), samples=[math.pi / math.sqrt(2)])
    assert tr.energies[-1] == pytest.approx(0.5, abs=1e-6)


def test_drift_is_fifth_order_in_step():
    p = BatteryParams(amp=1.0, omega=1.0, n_atoms=1)
    psi0 = basis_state(DickeBasis(1), -0.5).amplitudes
    steps = np.array([60, 120, 240, 600])  # one decade of h
    drift = np.array([abs(np.vdot(v, v).real - 1)
                      for v in (advance(psi0, p, 0.0, 30.0, int(n)) for n in steps)])
    slope = np.polyfit(np.log(30.0 / steps), np.log(drift), 1)[0]
    assert slope == pytest.approx(5.0, abs=0.3)
    assert drift[0] / drift[1] == pytest.approx(32, rel=0.25)


def test_linearity():
    p = BatteryParams.from_lambda(0.5, amp=1.0, omega=0.9, n_atoms=12)
    rng = np.random.default_rng(1)
    psi = rng.normal(size=13) + 1j * rng.normal(size=13)
    psi /= np.linalg.norm(psi)
    alpha = 0.3 - 1.7j
    a = advance(alpha * psi, p, 0.0, 4.0, 800)
    b = alpha * advance(psi, p, 0.0, 4.0, 800)
    assert np.abs(a - b).max() <= 1e-10
    original = psi.copy()
    advance(psi, p, 0.0, 1.0, 10)
    assert np.array_equal(psi, original)


@pytest.mark.parametrize("lam", [-1.2, 0.0, 1.2])
def test_norm_and_casimir_along_trace(lam):
    n = 40
    p = BatteryParams.from_lambda(lam, amp=1.0, omega=1.0, n_atoms=n)
    terms = build_terms(p)
    ops = terms.ops
    psi = basis_state(terms.basis, -n / 2).amplitudes
    s = n / 2
    for k in range(10):
        psi = advance(psi, p, k * 1.0, (k + 1) * 1.0, 2000, terms)
        sv = StateVector(terms.basis, psi)
        assert abs(sv.norm_sq() - 1) <= 1e-8
        assert abs(casimir(ops, sv) - s * (s + 1)) <= 1e-8 * s * (s + 1)
    tr = evolve(p, 10.0)
    assert tr.norm_drift <= 1e-8


@pytest.mark.parametrize("n", [2, 8])
def test_parallel_charging_identity(n):
    grid = np.linspace(0.5, 12, 9)
    e1 = charge_scan(BatteryParams(amp=1.0, omega=1.0, n_atoms=1), grid).energies
    en = charge_scan(BatteryParams(amp=1.0, omega=1.0, n_atoms=n), grid).energies
    assert np.max(np.abs(en / n - e1)) <= 1e-6


def test_locked_single_atom_tracks_closed_form_small_periods():
    grid = np.linspace(0.5, 8, 16)
    tr = charge_scan(BatteryParams(amp=0.5, omega=1.0), grid)
    ana = np.array([cf.locked_energy(t, 0.5) for t in grid])
    assert np.max(np.abs(tr.energies - ana)) <= 0.02


def test_locked_energy_uses_period_frequency():
    p = BatteryParams(amp=1.0, omega=123.0, n_atoms=3)
    a = locked_energy(p, 4.0).energies[-1]
    b = evolve(BatteryParams(amp=1.0, omega=2 * math.pi / 4.0, n_atoms=3), 4.0,
               samples=[4.0]).energies[-1]
    assert a == b


def test_fixed_frequency_scan_matches_single_evolution():
    p = BatteryParams.from_lambda(0.5, amp=1.0, omega=1.0, n_atoms=6)
    grid = np.linspace(0.5, 6, 12)
    scan = charge_scan(p, grid, "fixed_frequency")
    for t, e in zip(grid[::4], scan.energies[::4]):
        assert e == pytest.approx(evolve(p, t, samples=[t]).energies[-1], abs=1e-8)


def test_trace_sampling_and_reference():
    p = BatteryParams(amp=1.0, omega=2 * math.pi, n_atoms=1)
    tr = evolve(p, 2.0, EvolveSettings(steps_per_cycle=64))
    assert tr.times.size == 129 and tr.energies[0] == 0.0
    terms = build_terms(p)
    assert np.array_equal(stored_energy_trace(tr, terms, "free"),
                          stored_energy_trace(tr, terms, "internal"))


def test_stored_energy_of_fully_charged_state():
    n = 6
    p = BatteryParams(omega=1.0, n_atoms=n)
    terms = build_terms(p)
    pops = np.zeros((2, n + 1))
    pops[0, 0] = 1.0
    pops[1, -1] = 1.0
    tr = TraceResult(np.array([0.0, 1.0]), None, 0.0, None, Protocol.FIXED_FREQUENCY,
                     pops, pops[0], n)
    assert np.array_equal(stored_energy_trace(tr, terms, "free"), [0.0, n])


def test_accuracy_error_on_exhaustion():
    p = BatteryParams(amp=1.0, omega=1.0, n_atoms=1)
    with pytest.raises(AccuracyError) as exc:
        evolve(p, 5.0, EvolveSettings(norm_drift_budget=1e-300, max_refinements=0))
    assert exc.value.drift > 0


def test_invalid_inputs():
    p = BatteryParams(amp=1.0, omega=1.0)
    with pytest.raises(DomainError):
        evolve(p, 0.0)
    with pytest.raises(DomainError):
        charge_scan(p, [1.0, 0.5])
    with pytest.raises(DomainError):
        EvolveSettings(steps_per_cycle=8)


def test_map_ordered_independent_of_workers():
    items = list(range(23))
    ref = map_ordered(lambda x: x * x, items, 1)
    assert map_ordered(lambda x: x * x, items, 8) == ref
    grid = np.linspace(0.5, 10, 12)
    p = BatteryParams.from_lambda(-1.2, amp=1.0, omega=1.0, n_atoms=10)
    a = charge_scan(p, grid, workers=1).energies
    b = charge_scan(p, grid, workers=4).energies
    assert a.tobytes() == b.tobytes()
