import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dicke_battery import closed_form as cf
from dicke_battery.errors import DomainError
from dicke_battery.model import BatteryParams, Drive
from dicke_battery.sweep import (find_first_peak, fit_scaling, grid_amp_freq, locate_first_peak,
                                 loglog_slope, scan_period, sweep_atoms, sweep_lambda)


def test_first_peak_of_sine_squared():
    t = np.linspace(0, 4 * np.pi, 200)
    pk = find_first_peak(t, np.sin(t / 2) ** 2)
    assert pk.found
    assert pk.t == pytest.approx(np.pi, abs=1e-3)
    assert pk.e == pytest.approx(1.0, abs=1e-4)


def test_first_peak_not_global():
    t = np.linspace(0, 10, 501)
    e = 0.6 * np.exp(-(t - 2) ** 2) + np.exp(-(t - 7) ** 2)
    pk = find_first_peak(t, e)
    assert pk.t == pytest.approx(2.0, abs=0.01)


def test_monotone_gives_no_peak_flag():
    t = np.linspace(0, 1, 10)
    pk = find_first_peak(t, t ** 2)
    assert not pk.found and pk.index == 9 and pk.e == 1.0


def test_plateau_picks_earlier_index():
    t = np.arange(7.0)
    e = np.array([0, 1, 3, 3, 1, 0, 0], dtype=float)
    pk = find_first_peak(t, e, refine=False)
    assert pk.index == 2 and pk.t == 2.0


def test_small_wiggles_are_skipped():
    t = np.linspace(0, 10, 101)
    e = np.sin(t / 2) ** 2 * (t > 1)
    e[3] = 1e-6  # tiny bump well below 10% of the maximum
    assert find_first_peak(t, e).t == pytest.approx(np.pi, abs=0.02)
    assert find_first_peak(t, e, min_height=-np.inf, refine=False).index == 3


def test_first_peak_input_errors():
    with pytest.raises(DomainError):
        find_first_peak([0, 1, 2, 3], [0, 1, 0, 1])
    with pytest.raises(DomainError):
        find_first_peak([0, 2, 1, 3, 4], [0, 1, 0, 1, 0])


def test_loglog_slope_examples():
    x = np.array([1.0, 2.0, 5.0, 10.0, 30.0])
    assert loglog_slope(x, x) == pytest.approx(1.0, abs=1e-12)
    assert loglog_slope(x, np.full(5, 4.2)) == pytest.approx(0.0, abs=1e-12)
    assert abs(loglog_slope(x, 3 * x ** 2) - 2.0) <= 1e-12
    with pytest.raises(DomainError):
        loglog_slope(x, x - 1)


def test_fit_scaling_drops_transient():
    x = np.array([10.0, 20, 40, 80, 160, 320])
    y = 2 * x ** 1.5
    y[0] *= 3.0
    slope, drops = fit_scaling(x, y)
    assert drops == 1 and slope == pytest.approx(1.5, abs=1e-12)
    slope, drops = fit_scaling(x, 2 * x ** 1.5)
    assert drops == 0


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_loglog_slope_power_law(p, c):
    x = np.geomspace(1, 300, 9)
    assert loglog_slope(x, c * x ** p) == pytest.approx(p, abs=1e-9)


def test_scan_period_single_atom_peak():
    sc = scan_period(BatteryParams(amp=1.0, omega=1.0), (0.5, 30.0), 120)
    ana = np.array([cf.locked_energy(t, 1.0) for t in sc.t])
    assert sc.global_peak.e == pytest.approx(0.984, abs=0.01)
    assert np.max(np.abs(sc.energy - ana)[sc.t <= 10]) < 0.02


def test_scan_period_static_peak():
    sc = scan_period(BatteryParams(amp=1.0, drive=Drive.STATIC), (0.5, 6.0), 56)
    assert sc.peak.found
    assert sc.peak.t == pytest.approx(np.pi / np.sqrt(2), abs=2e-3)
    assert sc.peak.e == pytest.approx(0.5, abs=1e-4)


def test_g_zero_equals_lambda_zero():
    a = scan_period(BatteryParams(amp=1.0, omega=1.0, n_atoms=4, g=0.0), (0.5, 8), 20)
    b = scan_period(BatteryParams.from_lambda(0.0, amp=1.0, omega=1.0, n_atoms=4), (0.5, 8), 20)
    assert np.array_equal(a.energy, b.energy)


def test_locate_first_peak_refines_inside_bracket():
    p = BatteryParams.from_lambda(0.5, amp=1.0, omega=1.0, n_atoms=10)
    pk, coarse = locate_first_peak(p, (0.5, 12.0), 24, 17)
    k = coarse.peak.index
    assert coarse.t[k - 1] <= pk.t <= coarse.t[k + 1]
    assert pk.e >= coarse.energy[k] - 1e-12


def test_sweep_atoms_metadata_and_consistency():
    res = sweep_atoms(0.5, 1.0, [10, 20, 40], t_range=(0.5, 12.0), n_points=24,
                      refine_points=9)
    assert np.all((res.e_max > 0) & (res.e_max <= 1 + 1e-6))
    assert np.allclose(res.omega_max * res.t_max, 2 * math.pi, rtol=0, atol=1e-15)
    assert {"slope", "slope_per_atom", "dropped_smallest"} <= set(res.metadata)
    assert res.metadata["slope_per_atom"] == pytest.approx(res.metadata["slope"] - 1)
    with pytest.raises(DomainError):
        sweep_atoms(0.5, 1.0, [20, 10])


def test_sweep_lambda_orders_charging_times():
    res = sweep_lambda(30, 1.0, [-1.2, 0.0, 1.2], t_range=(0.5, 12.0), n_points=24,
                       refine_points=9)
    assert res.t_max[2] < res.t_max[1] < res.t_max[0]
    assert res.e_max[0] < res.e_max[1] - 0.05
    again = sweep_lambda(30, 1.0, [-1.2, 0.0, 1.2], t_range=(0.5, 12.0), n_points=24,
                         refine_points=9, workers=3)
    assert again.e_max.tobytes() == res.e_max.tobytes()


def test_analytic_surface_and_ridge():
    amps = np.linspace(0.05, 2.0, 40)
    omegas = np.linspace(0.05, 1.5, 60)
    surf = grid_amp_freq(amps, omegas)
    assert surf.energy.shape == (40, 60)
    assert surf.missing == int(np.isnan(surf.energy).sum())
    assert np.nanmax(surf.energy[0]) < 0.05
    assert np.nanmax(surf.ridge_energy) > 0.9
    with pytest.raises(DomainError):
        grid_amp_freq(amps, omegas, n_atoms=2)
    with pytest.raises(DomainError):
        grid_amp_freq(amps, omegas, mode="exotic")


def test_numeric_surface_ridge_matches_analytic():
    amps = np.array([0.5, 1.0])
    omegas = np.linspace(0.6, 1.4, 17)
    ana = grid_amp_freq(amps, omegas)
    num = grid_amp_freq(amps, omegas, mode="numeric")
    step = omegas[1] - omegas[0]
    assert np.all(np.abs(ana.ridge_omega - num.ridge_omega) <= step + 1e-12)
